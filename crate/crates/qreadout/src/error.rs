use thiserror::Error;

/// Errors raised by the simulators and readout pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {qubits}-qubit state")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("qubit {0} appears more than once among targets and controls")]
    OverlappingQubits(usize),

    #[error("register layout needs {total} qubits, cap is {cap}")]
    TooManyQubits { total: usize, cap: usize },

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("ancilla qubit {0} is not in |0>")]
    AncillaNotZero(usize),

    #[error("post-selection has zero probability")]
    ZeroProbability,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("input is identically zero")]
    ZeroNorm,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("amplitude estimation stalled after {iterations} iterations (half-width {half_width:.3e})")]
    ScheduleExhausted { iterations: usize, half_width: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
