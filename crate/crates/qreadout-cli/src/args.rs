use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qreadout::readout_sampling::{Average, Method};

#[derive(Debug, Parser)]
#[command(name = "qreadout", version, about = "Readout experiments on simulated quantum states")]
pub struct Cli {
    /// Output directory (default: $QREADOUT_OUT_DIR, else ./qreadout-out)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// JSON configuration file or a previous run manifest; flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scaling benchmarks
    #[command(subcommand)]
    Bench(Bench),
    /// Read out one function and dump the reconstruction
    Readout(ReadoutArgs),
    /// Velocity field post-processing
    #[command(subcommand)]
    Cfd(Cfd),
    /// Time-stepwise readout of the 2D Burgers equation
    #[command(subcommand)]
    Burgers(Burgers),
    /// Closed-form shot estimates for a target error
    EstimateShots(EstimateArgs),
}

#[derive(Debug, Subcommand)]
pub enum Bench {
    /// Gaussian example
    Example1(ExampleArgs),
    /// Sine example
    Example2(ExampleArgs),
    /// RSR with block-average post-processing against the grid size
    Postproc(PostprocArgs),
    /// FSR and RSR errors against shots on a velocity-field quantity
    CfdScaling(CfdScalingArgs),
}

#[derive(Debug, Subcommand)]
pub enum Cfd {
    /// Heatmaps of velocity components, vorticity and stream function
    Visualize(VisualizeArgs),
}

#[derive(Debug, Subcommand)]
pub enum Burgers {
    /// Run the time-stepwise readout and write the per-step trace
    Run(BurgersArgs),
}

fn method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: qreadout::Error| e.to_string())
}

fn average(s: &str) -> Result<Average, String> {
    match s {
        "rms" => Ok(Average::Rms),
        "mean" => Ok(Average::Mean),
        "shifted-harmonic" | "shifted_harmonic" => Ok(Average::ShiftedHarmonic { delta: 0.1 }),
        "fmf" => Ok(Average::Fmf),
        other => Err(format!("unknown average {other:?} (rms, mean, shifted-harmonic, fmf)")),
    }
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    /// Methods to run
    #[arg(long, value_delimiter = ',', value_parser = method)]
    pub methods: Option<Vec<Method>>,
    /// Shot budgets per circuit
    #[arg(long, value_delimiter = ',')]
    pub shots: Option<Vec<u64>>,
    /// RQAE target errors for FSQAE
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// RQAE target errors for FSQAE2
    #[arg(long, value_delimiter = ',')]
    pub fsqae2_eps: Option<Vec<f64>>,
    /// Qubits per dimension for the sampling methods
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Qubits per dimension for the amplitude-estimation methods
    #[arg(long)]
    pub qae_qubits: Option<usize>,
    /// Block sizes of the shot-free sweeps
    #[arg(long, value_delimiter = ',')]
    pub m_sweep: Option<Vec<usize>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PostprocArgs {
    /// gaussian2d or sine2d
    #[arg(long)]
    pub function: Option<String>,
    /// Qubits per dimension of the grids
    #[arg(long, value_delimiter = ',')]
    pub grid_qubits: Option<Vec<usize>>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Averages: rms, mean, shifted-harmonic, fmf
    #[arg(long, value_delimiter = ',', value_parser = average)]
    pub averages: Option<Vec<Average>>,
    /// linear or cubic
    #[arg(long)]
    pub spline: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// taylor-green, cavity-analog, or a path to field data
    #[arg(long)]
    pub field: Option<String>,
    /// File layout: matrix or grid-csv
    #[arg(long)]
    pub format: Option<String>,
    /// Qubits per axis of the working grid
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Treat the field as periodic in derivatives
    #[arg(long)]
    pub periodic: bool,
}

#[derive(Debug, Args)]
pub struct CfdScalingArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// ux, uy, curl or stream
    #[arg(long)]
    pub quantity: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub shots: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_parser = method)]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VisualizeArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Quantities to render
    #[arg(long, value_delimiter = ',')]
    pub quantities: Option<Vec<String>>,
    /// Also render the readout of each quantity with this method
    #[arg(long, value_parser = method)]
    pub method: Option<Method>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the working velocity field as grid CSV
    #[arg(long)]
    pub dump_field: bool,
}

#[derive(Debug, Args)]
pub struct ReadoutArgs {
    /// Grid CSV with one value column
    #[arg(long, conflicts_with = "function")]
    pub input: Option<PathBuf>,
    /// Built-in test function: gaussian2d, sine2d, ramp1d
    #[arg(long)]
    pub function: Option<String>,
    /// Qubits per dimension for a built-in function
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long, value_parser = method)]
    pub method: Option<Method>,
    /// Shots per circuit
    #[arg(long, conflicts_with = "exact")]
    pub shots: Option<u64>,
    /// Use exact outcome probabilities
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed block sizes per dimension (default: adaptive)
    #[arg(long, value_delimiter = ',')]
    pub truncation: Option<Vec<usize>>,
    /// RQAE target error for the amplitude-estimation methods
    #[arg(long)]
    pub eps: Option<f64>,
    /// linear or cubic
    #[arg(long)]
    pub spline: Option<String>,
    /// analytic, gate-level or fast
    #[arg(long)]
    pub engine: Option<String>,
    /// Known lower bound subtracted before encoding
    #[arg(long, allow_negative_numbers = true)]
    pub shift: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BurgersArgs {
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, value_parser = method)]
    pub method: Option<Method>,
    /// Shots per circuit
    #[arg(long, conflicts_with = "exact")]
    pub shots: Option<u64>,
    /// Exact readout, no shot noise
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// dense or matrix-free
    #[arg(long)]
    pub reference: Option<String>,
    /// Write the reconstructed field of every step
    #[arg(long)]
    pub dump_fields: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Regularity classes: w11, w21
    #[arg(long, value_delimiter = ',')]
    pub class: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
}
