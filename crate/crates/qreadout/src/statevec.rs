//! Dense statevector simulator with a gate-level and a closed-form backend.
//!
//! Qubit 0 is the least significant bit of the basis index. Registers of a
//! [`RegisterLayout`] occupy contiguous qubits in dimension order, followed by
//! the ancillas.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::sampling::{multinomial, rng_for};
use crate::scalar::{from_usize, Real};

/// Default cap on the number of simulated qubits.
pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Per-dimension data registers followed by ancilla qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    dims: Vec<usize>,
    ancillas: usize,
}

impl RegisterLayout {
    pub fn new(dims: &[usize], ancillas: usize) -> Result<Self> {
        Self::with_cap(dims, ancillas, DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(dims: &[usize], ancillas: usize, cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidLayout("at least one register is required".into()));
        }
        if let Some(l) = dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidLayout(format!("register {l} has zero qubits")));
        }
        let total = dims.iter().sum::<usize>() + ancillas;
        if total > cap {
            return Err(Error::TooManyQubits { total, cap });
        }
        Ok(Self {
            dims: dims.to_vec(),
            ancillas,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn data_qubits(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn total(&self) -> usize {
        self.data_qubits() + self.ancillas
    }

    /// Qubits of register `l`.
    pub fn register(&self, l: usize) -> QubitSlice {
        let start = self.dims[..l].iter().sum();
        QubitSlice::new(start, self.dims[l])
    }

    /// All data qubits as one slice.
    pub fn data(&self) -> QubitSlice {
        QubitSlice::new(0, self.data_qubits())
    }

    /// Qubit index of ancilla `i`.
    pub fn ancilla(&self, i: usize) -> usize {
        assert!(i < self.ancillas, "ancilla {i} out of range");
        self.data_qubits() + i
    }
}

/// Contiguous run of qubits; `start` holds the least significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitSlice {
    pub start: usize,
    pub len: usize,
}

impl QubitSlice {
    pub const fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn bit(&self, i: usize) -> usize {
        self.start + i
    }

    /// Number of basis states of the slice.
    pub fn size(&self) -> usize {
        1 << self.len
    }

    pub fn qubits(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }

    /// Sub-slice of the `len` lowest bits, offset by `skip`.
    pub fn sub(&self, skip: usize, len: usize) -> QubitSlice {
        assert!(skip + len <= self.len);
        QubitSlice::new(self.start + skip, len)
    }
}

/// Control on a qubit; `on == false` is an open (|0>) control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub on: bool,
}

impl Control {
    pub const fn on(qubit: usize) -> Self {
        Self { qubit, on: true }
    }

    pub const fn off(qubit: usize) -> Self {
        Self { qubit, on: false }
    }
}

/// Single-qubit gates of the simulated gate set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate<T> {
    H,
    X,
    Z,
    Ry(T),
    Phase(T),
}

impl<T: Real> Gate<T> {
    pub fn adjoint(self) -> Self {
        match self {
            Gate::Ry(t) => Gate::Ry(-t),
            Gate::Phase(p) => Gate::Phase(-p),
            g => g,
        }
    }

    fn matrix(self) -> [Complex<T>; 4] {
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        match self {
            Gate::H => {
                let s = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
                [s, s, s, -s]
            }
            Gate::X => [zero, one, one, zero],
            Gate::Z => [one, zero, zero, -one],
            Gate::Ry(theta) => {
                let half = theta / T::lit(2.0);
                let (s, c) = half.sin_cos();
                [
                    Complex::new(c, T::zero()),
                    Complex::new(-s, T::zero()),
                    Complex::new(s, T::zero()),
                    Complex::new(c, T::zero()),
                ]
            }
            Gate::Phase(phi) => [zero + one, zero, zero, Complex::from_polar(T::one(), phi)],
        }
    }
}

/// Simulation backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// Decomposes composite operations into elementary gates.
    GateLevel,
    /// FFT, index permutations and Householder reflections.
    #[default]
    Fast,
}

/// One operation of a [`Circuit`].
#[derive(Clone, Debug)]
pub enum Op<T> {
    Gate {
        gate: Gate<T>,
        target: usize,
        controls: Vec<Control>,
    },
    Qft {
        slice: QubitSlice,
        inverse: bool,
        controls: Vec<Control>,
    },
    /// `|k> -> |k ± j mod N>`; subtraction when `inverse`.
    ModAdd {
        slice: QubitSlice,
        j: usize,
        inverse: bool,
        controls: Vec<Control>,
    },
    Increment {
        slice: QubitSlice,
        inverse: bool,
        controls: Vec<Control>,
    },
    /// Even extension of `slice` with `ancilla` as the new top bit.
    EvenExtension {
        slice: QubitSlice,
        ancilla: usize,
        inverse: bool,
        controls: Vec<Control>,
    },
    /// Householder unitary mapping `|0>` of `qubits` (first = least
    /// significant) to `psi`.
    StatePrep {
        qubits: Vec<usize>,
        psi: Arc<Vec<Complex<T>>>,
        inverse: bool,
        controls: Vec<Control>,
    },
    /// `I - 2|0><0|` on the listed qubits.
    ReflectZero { qubits: Vec<usize> },
    GlobalPhase { phase: T, controls: Vec<Control> },
}

impl<T: Real> Op<T> {
    pub fn inverse(&self) -> Self {
        match self.clone() {
            Op::Gate {
                gate,
                target,
                controls,
            } => Op::Gate {
                gate: gate.adjoint(),
                target,
                controls,
            },
            Op::Qft {
                slice,
                inverse,
                controls,
            } => Op::Qft {
                slice,
                inverse: !inverse,
                controls,
            },
            Op::ModAdd {
                slice,
                j,
                inverse,
                controls,
            } => Op::ModAdd {
                slice,
                j,
                inverse: !inverse,
                controls,
            },
            Op::Increment {
                slice,
                inverse,
                controls,
            } => Op::Increment {
                slice,
                inverse: !inverse,
                controls,
            },
            Op::EvenExtension {
                slice,
                ancilla,
                inverse,
                controls,
            } => Op::EvenExtension {
                slice,
                ancilla,
                inverse: !inverse,
                controls,
            },
            Op::StatePrep {
                qubits,
                psi,
                inverse,
                controls,
            } => Op::StatePrep {
                qubits,
                psi,
                inverse: !inverse,
                controls,
            },
            op @ Op::ReflectZero { .. } => op,
            Op::GlobalPhase { phase, controls } => Op::GlobalPhase {
                phase: -phase,
                controls,
            },
        }
    }

    /// Adds controls to the operation.
    pub fn controlled(&self, extra: &[Control]) -> Self {
        let mut op = self.clone();
        match &mut op {
            Op::Gate { controls, .. }
            | Op::Qft { controls, .. }
            | Op::ModAdd { controls, .. }
            | Op::Increment { controls, .. }
            | Op::EvenExtension { controls, .. }
            | Op::StatePrep { controls, .. }
            | Op::GlobalPhase { controls, .. } => controls.extend_from_slice(extra),
            Op::ReflectZero { qubits } => {
                // Controlled S0 = S0 restricted to the controlled subspace,
                // realised as a phase flip on the joint pattern.
                let qubits = qubits.clone();
                let mut controls: Vec<Control> = qubits.iter().map(|&q| Control::off(q)).collect();
                controls.extend_from_slice(extra);
                return Op::GlobalPhase {
                    phase: T::PI(),
                    controls,
                };
            }
        }
        op
    }
}

/// Ordered list of operations.
#[derive(Clone, Debug, Default)]
pub struct Circuit<T> {
    pub ops: Vec<Op<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new() -> Self {
        Self { ops: Vec::new() }
    }

    pub fn push(&mut self, op: Op<T>) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn gate(&mut self, gate: Gate<T>, target: usize, controls: &[Control]) -> &mut Self {
        self.push(Op::Gate {
            gate,
            target,
            controls: controls.to_vec(),
        })
    }

    pub fn extend(&mut self, other: &Circuit<T>) -> &mut Self {
        self.ops.extend(other.ops.iter().cloned());
        self
    }

    pub fn inverse(&self) -> Self {
        Self {
            ops: self.ops.iter().rev().map(Op::inverse).collect(),
        }
    }

    pub fn controlled(&self, extra: &[Control]) -> Self {
        Self {
            ops: self.ops.iter().map(|op| op.controlled(extra)).collect(),
        }
    }

    pub fn apply(&self, state: &mut StateVector<T>, backend: Backend) -> Result<()> {
        for op in &self.ops {
            state.apply_op(op, backend)?;
        }
        Ok(())
    }
}

/// Outcome counts over a measured qubit subset.
///
/// Outcome bit `i` corresponds to `qubits()[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementHistogram {
    qubits: Vec<usize>,
    counts: Vec<u64>,
    shots: u64,
}

impl MeasurementHistogram {
    pub fn new(qubits: Vec<usize>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1usize << qubits.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} counts for {} measured qubits",
                counts.len(),
                qubits.len()
            )));
        }
        let shots = counts.iter().sum();
        Ok(Self {
            qubits,
            counts,
            shots,
        })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, outcome: usize) -> u64 {
        self.counts[outcome]
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Adds the counts of another histogram over the same qubits.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.qubits != other.qubits {
            return Err(Error::ShapeMismatch("histograms measure different qubits".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.shots += other.shots;
        Ok(())
    }
}

/// Complex amplitudes over `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n > DEFAULT_QUBIT_CAP {
            return Err(Error::TooManyQubits {
                total: n,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        if index >= 1 << n {
            return Err(Error::IndexOutOfRange(format!("basis index {index} on {n} qubits")));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[index] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits: n, amps })
    }

    /// Zero state of a register layout.
    pub fn for_layout(layout: &RegisterLayout) -> Result<Self> {
        Self::zero(layout.total())
    }

    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(invalid(format!("amplitude count {len} is not a power of two")));
        }
        let state = Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        };
        if state.norm_sqr() > T::one() + T::norm_tolerance() {
            return Err(invalid("squared norm exceeds one"));
        }
        Ok(state)
    }

    /// Real amplitudes `psi` on the low qubits, all other qubits in `|0>`.
    pub fn embed_real(n: usize, psi: &[T]) -> Result<Self> {
        let mut s = Self::zero(n)?;
        if psi.len() > s.amps.len() {
            return Err(Error::ShapeMismatch("data longer than the register".into()));
        }
        for (a, &p) in s.amps.iter_mut().zip(psi) {
            *a = Complex::new(p, T::zero());
        }
        if s.norm_sqr() > T::one() + T::norm_tolerance() {
            return Err(invalid("squared norm exceeds one"));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex<T> {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, x| s + x)
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        let mut seen = 0u64;
        for &q in qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    qubits: self.n_qubits,
                });
            }
            if seen >> q & 1 == 1 {
                return Err(Error::OverlappingQubits(q));
            }
            seen |= 1 << q;
        }
        Ok(())
    }

    fn check_op(&self, targets: &[usize], controls: &[Control]) -> Result<(usize, usize)> {
        let mut all = targets.to_vec();
        all.extend(controls.iter().map(|c| c.qubit));
        self.check_qubits(&all)?;
        Ok(control_masks(controls))
    }

    pub fn apply_gate(&mut self, gate: Gate<T>, target: usize, controls: &[Control]) -> Result<()> {
        let (mask, value) = self.check_op(&[target], controls)?;
        let [m00, m01, m10, m11] = gate.matrix();
        let t = 1usize << target;
        for i in 0..self.amps.len() {
            if i & t != 0 || i & mask != value {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | t];
            self.amps[i] = m00 * a0 + m01 * a1;
            self.amps[i | t] = m10 * a0 + m11 * a1;
        }
        Ok(())
    }

    pub fn qft(&mut self, slice: QubitSlice, inverse: bool, backend: Backend) -> Result<()> {
        self.apply_op(
            &Op::Qft {
                slice,
                inverse,
                controls: vec![],
            },
            backend,
        )
    }

    pub fn modular_add(&mut self, slice: QubitSlice, j: usize, inverse: bool, backend: Backend) -> Result<()> {
        self.apply_op(
            &Op::ModAdd {
                slice,
                j,
                inverse,
                controls: vec![],
            },
            backend,
        )
    }

    pub fn increment(&mut self, slice: QubitSlice, controls: &[Control], backend: Backend) -> Result<()> {
        self.apply_op(
            &Op::Increment {
                slice,
                inverse: false,
                controls: controls.to_vec(),
            },
            backend,
        )
    }

    /// Even extension of `slice` into the ancilla, which must be `|0>`.
    pub fn even_extension(&mut self, slice: QubitSlice, ancilla: usize, backend: Backend) -> Result<()> {
        self.check_qubits(&[ancilla])?;
        let bit = 1usize << ancilla;
        let stray = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .fold(T::zero(), |s, x| s + x);
        if stray > T::norm_tolerance() {
            return Err(Error::AncillaNotZero(ancilla));
        }
        self.apply_op(
            &Op::EvenExtension {
                slice,
                ancilla,
                inverse: false,
                controls: vec![],
            },
            backend,
        )
    }

    pub fn apply_op(&mut self, op: &Op<T>, backend: Backend) -> Result<()> {
        match op {
            Op::Gate {
                gate,
                target,
                controls,
            } => self.apply_gate(*gate, *target, controls),
            Op::Qft {
                slice,
                inverse,
                controls,
            } => {
                self.check_op(&slice.qubits(), controls)?;
                match backend {
                    Backend::GateLevel => self.apply_gates(&qft_gates(*slice, *inverse, controls)),
                    Backend::Fast => {
                        let n = slice.size();
                        let mut planner = FftPlanner::<T>::new();
                        let fft = if *inverse {
                            planner.plan_fft_forward(n)
                        } else {
                            planner.plan_fft_inverse(n)
                        };
                        let scale = T::one() / from_usize::<T>(n).sqrt();
                        self.for_each_block(&slice.qubits(), controls, |block| {
                            fft.process(block);
                            for a in block.iter_mut() {
                                *a = *a * scale;
                            }
                        });
                        Ok(())
                    }
                }
            }
            Op::ModAdd {
                slice,
                j,
                inverse,
                controls,
            } => {
                self.check_op(&slice.qubits(), controls)?;
                let n = slice.size();
                if *j >= n {
                    return Err(Error::IndexOutOfRange(format!("adder constant {j} for N={n}")));
                }
                match backend {
                    Backend::GateLevel => self.apply_gates(&adder_gates(*slice, *j, *inverse, controls)),
                    Backend::Fast => {
                        let shift = if *inverse { (n - j) % n } else { *j };
                        self.for_each_block(&slice.qubits(), controls, |b| b.rotate_right(shift));
                        Ok(())
                    }
                }
            }
            Op::Increment {
                slice,
                inverse,
                controls,
            } => {
                self.check_op(&slice.qubits(), controls)?;
                match backend {
                    Backend::GateLevel => self.apply_gates(&increment_gates(*slice, *inverse, controls)),
                    Backend::Fast => {
                        self.for_each_block(&slice.qubits(), controls, |b| {
                            if *inverse {
                                b.rotate_left(1)
                            } else {
                                b.rotate_right(1)
                            }
                        });
                        Ok(())
                    }
                }
            }
            Op::EvenExtension {
                slice,
                ancilla,
                inverse,
                controls,
            } => {
                let mut qubits = slice.qubits();
                qubits.push(*ancilla);
                self.check_op(&qubits, controls)?;
                match backend {
                    Backend::GateLevel => {
                        self.apply_gates(&extension_gates(*slice, *ancilla, *inverse, controls))
                    }
                    Backend::Fast => {
                        let n = slice.size();
                        let h = T::FRAC_1_SQRT_2();
                        let mut scratch = vec![Complex::new(T::zero(), T::zero()); 2 * n];
                        self.for_each_block(&qubits, controls, |b| {
                            if *inverse {
                                for k in 0..n {
                                    let a0 = b[k];
                                    let a1 = b[n + (n - k) % n];
                                    scratch[k] = (a0 + a1) * h;
                                    scratch[n + k] = (a0 - a1) * h;
                                }
                            } else {
                                for k in 0..n {
                                    let a0 = b[k];
                                    let a1 = b[n + k];
                                    scratch[k] = (a0 + a1) * h;
                                    scratch[n + (n - k) % n] = (a0 - a1) * h;
                                }
                            }
                            b.copy_from_slice(&scratch);
                        });
                        Ok(())
                    }
                }
            }
            Op::StatePrep {
                qubits,
                psi,
                inverse,
                controls,
            } => {
                self.check_op(qubits, controls)?;
                if psi.len() != 1usize << qubits.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "state preparation of {} amplitudes on {} qubits",
                        psi.len(),
                        qubits.len()
                    )));
                }
                let h = Householder::new(psi);
                self.for_each_block(qubits, controls, |b| h.apply(b, *inverse));
                Ok(())
            }
            Op::ReflectZero { qubits } => {
                self.check_qubits(qubits)?;
                match backend {
                    Backend::GateLevel => {
                        let (&q0, rest) = qubits
                            .split_first()
                            .ok_or_else(|| invalid("reflection on an empty qubit set"))?;
                        let open: Vec<Control> = rest.iter().map(|&q| Control::off(q)).collect();
                        self.apply_gate(Gate::X, q0, &[])?;
                        self.apply_gate(Gate::Z, q0, &open)?;
                        self.apply_gate(Gate::X, q0, &[])
                    }
                    Backend::Fast => {
                        let mask = qubits.iter().fold(0usize, |m, &q| m | 1 << q);
                        for (i, a) in self.amps.iter_mut().enumerate() {
                            if i & mask == 0 {
                                *a = -*a;
                            }
                        }
                        Ok(())
                    }
                }
            }
            Op::GlobalPhase { phase, controls } => {
                let (mask, value) = self.check_op(&[], controls)?;
                let w = Complex::from_polar(T::one(), *phase);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask == value {
                        *a = *a * w;
                    }
                }
                Ok(())
            }
        }
    }

    fn apply_gates(&mut self, gates: &[(Gate<T>, usize, Vec<Control>)]) -> Result<()> {
        for (g, t, c) in gates {
            self.apply_gate(*g, *t, c)?;
        }
        Ok(())
    }

    /// Calls `f` on every sub-vector spanned by `qubits` (first = least
    /// significant) whose remaining bits satisfy the controls.
    fn for_each_block<F: FnMut(&mut [Complex<T>])>(&mut self, qubits: &[usize], controls: &[Control], mut f: F) {
        let (cmask, cval) = control_masks(controls);
        let qmask = qubits.iter().fold(0usize, |m, &q| m | 1 << q);
        let offsets: Vec<usize> = (0..1usize << qubits.len())
            .map(|s| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| s >> b & 1 == 1)
                    .fold(0, |o, (_, &q)| o | 1 << q)
            })
            .collect();
        let mut block = vec![Complex::new(T::zero(), T::zero()); offsets.len()];
        for base in 0..self.amps.len() {
            if base & qmask != 0 || base & cmask != cval {
                continue;
            }
            for (b, &o) in block.iter_mut().zip(&offsets) {
                *b = self.amps[base | o];
            }
            f(&mut block);
            for (b, &o) in block.iter().zip(&offsets) {
                self.amps[base | o] = *b;
            }
        }
    }

    /// Marginal outcome probabilities of the measured qubits.
    pub fn probabilities(&self, measured: &[usize]) -> Result<Vec<T>> {
        self.check_qubits(measured)?;
        let mut p = vec![T::zero(); 1 << measured.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut o = 0usize;
            for (b, &q) in measured.iter().enumerate() {
                o |= (i >> q & 1) << b;
            }
            p[o] += a.norm_sqr();
        }
        Ok(p)
    }

    /// Samples `shots` measurements of `measured`, seeded.
    pub fn sample(&self, measured: &[usize], shots: u64, seed: u64) -> Result<MeasurementHistogram> {
        self.sample_with(measured, shots, &mut rng_for(seed, &[]))
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        measured: &[usize],
        shots: u64,
        rng: &mut R,
    ) -> Result<MeasurementHistogram> {
        if shots == 0 {
            return Err(invalid("shots must be at least 1"));
        }
        let norm = self.norm_sqr();
        if (norm - T::one()).abs() > T::lit(1e-6).max(T::norm_tolerance()) {
            return Err(invalid(format!("sampling needs a normalized state, norm^2 = {norm}")));
        }
        let p: Vec<f64> = self
            .probabilities(measured)?
            .into_iter()
            .map(|x| x.as_f64() / norm.as_f64())
            .collect();
        MeasurementHistogram::new(measured.to_vec(), multinomial(rng, shots, &p))
    }

    /// Projects `qubits` onto `outcome` (bit `i` for `qubits[i]`) and
    /// renormalizes. Returns the conditional state and its probability.
    pub fn post_select(&self, qubits: &[usize], outcome: usize) -> Result<(Self, T)> {
        self.check_qubits(qubits)?;
        if outcome >= 1 << qubits.len() {
            return Err(Error::IndexOutOfRange(format!("outcome {outcome}")));
        }
        let controls: Vec<Control> = qubits
            .iter()
            .enumerate()
            .map(|(b, &q)| Control {
                qubit: q,
                on: outcome >> b & 1 == 1,
            })
            .collect();
        let (mask, value) = control_masks(&controls);
        let mut amps = self.amps.clone();
        for (i, a) in amps.iter_mut().enumerate() {
            if i & mask != value {
                *a = Complex::new(T::zero(), T::zero());
            }
        }
        let p = amps.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, x| s + x);
        if p <= T::zero() {
            return Err(Error::ZeroProbability);
        }
        let inv = T::one() / p.sqrt();
        for a in amps.iter_mut() {
            *a = *a * inv;
        }
        Ok((
            Self {
                n_qubits: self.n_qubits,
                amps,
            },
            p,
        ))
    }
}

fn control_masks(controls: &[Control]) -> (usize, usize) {
    controls.iter().fold((0, 0), |(m, v), c| {
        (m | 1 << c.qubit, if c.on { v | 1 << c.qubit } else { v })
    })
}

type GateList<T> = Vec<(Gate<T>, usize, Vec<Control>)>;

fn with(controls: &[Control], extra: &[Control]) -> Vec<Control> {
    let mut c = controls.to_vec();
    c.extend_from_slice(extra);
    c
}

fn adjoint_list<T: Real>(gates: GateList<T>) -> GateList<T> {
    gates.into_iter().rev().map(|(g, t, c)| (g.adjoint(), t, c)).collect()
}

/// Hadamards, controlled phases and the final bit reversal.
pub(crate) fn qft_gates<T: Real>(slice: QubitSlice, inverse: bool, controls: &[Control]) -> GateList<T> {
    let n = slice.len;
    let mut g = Vec::new();
    for j in (0..n).rev() {
        g.push((Gate::H, slice.bit(j), controls.to_vec()));
        for k in (0..j).rev() {
            let phi = T::PI() / T::lit((1u64 << (j - k)) as f64);
            g.push((Gate::Phase(phi), slice.bit(j), with(controls, &[Control::on(slice.bit(k))])));
        }
    }
    for i in 0..n / 2 {
        let (a, b) = (slice.bit(i), slice.bit(n - 1 - i));
        g.push((Gate::X, b, with(controls, &[Control::on(a)])));
        g.push((Gate::X, a, with(controls, &[Control::on(b)])));
        g.push((Gate::X, b, with(controls, &[Control::on(a)])));
    }
    if inverse {
        adjoint_list(g)
    } else {
        g
    }
}

/// Fourier-basis (Draper) adder.
fn adder_gates<T: Real>(slice: QubitSlice, j: usize, inverse: bool, controls: &[Control]) -> GateList<T> {
    let n = slice.size();
    let sign = if inverse { -T::one() } else { T::one() };
    let mut g = qft_gates(slice, false, &[]);
    for b in 0..slice.len {
        let phi = sign * T::TAU() * from_usize::<T>((j << b) % n) / from_usize::<T>(n);
        g.push((Gate::Phase(phi), slice.bit(b), controls.to_vec()));
    }
    g.extend(qft_gates(slice, true, &[]));
    g
}

/// Ripple of multi-controlled X gates, high bit first.
fn increment_gates<T: Real>(slice: QubitSlice, inverse: bool, controls: &[Control]) -> GateList<T> {
    let mut g = Vec::new();
    for b in (0..slice.len).rev() {
        let lower: Vec<Control> = (0..b).map(|i| Control::on(slice.bit(i))).collect();
        g.push((Gate::X, slice.bit(b), with(controls, &lower)));
    }
    if inverse {
        g.reverse();
    }
    g
}

/// H on the ancilla, then controlled bit flip and increment of the register.
fn extension_gates<T: Real>(slice: QubitSlice, ancilla: usize, inverse: bool, controls: &[Control]) -> GateList<T> {
    let mut g = vec![(Gate::H, ancilla, controls.to_vec())];
    let c = with(controls, &[Control::on(ancilla)]);
    for q in slice.qubits() {
        g.push((Gate::X, q, c.clone()));
    }
    g.extend(increment_gates(slice, false, &c));
    if inverse {
        adjoint_list(g)
    } else {
        g
    }
}

/// `U = e^{iφ}(I - 2 v v† / |v|²)` with `v = e^{iφ}|0> - ψ`, `φ = arg ψ_0`.
struct Householder<'a, T> {
    psi: &'a [Complex<T>],
    phase: Complex<T>,
    v0: Complex<T>,
    inv_norm: T,
}

impl<'a, T: Real> Householder<'a, T> {
    fn new(psi: &'a [Complex<T>]) -> Self {
        let phi = psi[0].arg();
        let phase = Complex::from_polar(T::one(), phi);
        let v0 = phase - psi[0];
        let norm: T = v0.norm_sqr()
            + psi[1..]
                .iter()
                .map(|a| a.norm_sqr())
                .fold(T::zero(), |s, x| s + x);
        let inv_norm = if norm > T::epsilon() {
            T::lit(2.0) / norm
        } else {
            T::zero()
        };
        Self {
            psi,
            phase,
            v0,
            inv_norm,
        }
    }

    fn v(&self, i: usize) -> Complex<T> {
        if i == 0 {
            self.v0
        } else {
            -self.psi[i]
        }
    }

    fn apply(&self, w: &mut [Complex<T>], inverse: bool) {
        let phase = if inverse { self.phase.conj() } else { self.phase };
        let mut dot = Complex::new(T::zero(), T::zero());
        for (i, a) in w.iter().enumerate() {
            dot += self.v(i).conj() * a;
        }
        let coef = dot * self.inv_norm;
        for (i, a) in w.iter_mut().enumerate() {
            *a = (*a - self.v(i) * coef) * phase;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::<f64>::zero(1).unwrap();
        s.apply_gate(Gate::H, 0, &[]).unwrap();
        assert_abs_diff_eq!(s.amplitude(0).re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).re, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn x_flips_and_ry_of_one_is_identity() {
        let mut s = StateVector::<f64>::zero(1).unwrap();
        s.apply_gate(Gate::X, 0, &[]).unwrap();
        assert_eq!(s.amplitude(1), c(1.0, 0.0));
        s.apply_gate(Gate::Ry(2.0 * 1.0f64.acos()), 0, &[]).unwrap();
        assert_eq!(s.amplitude(1), c(1.0, 0.0));
    }

    #[test]
    fn rejects_bad_indices() {
        let mut s = StateVector::<f64>::zero(2).unwrap();
        assert!(matches!(
            s.apply_gate(Gate::X, 2, &[]),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            s.apply_gate(Gate::X, 1, &[Control::on(1)]),
            Err(Error::OverlappingQubits(1))
        ));
    }

    #[test]
    fn layout_cap_and_positions() {
        let l = RegisterLayout::new(&[3, 2], 2).unwrap();
        assert_eq!(l.register(1), QubitSlice::new(3, 2));
        assert_eq!(l.ancilla(1), 6);
        assert!(matches!(
            RegisterLayout::new(&[12, 12], 1),
            Err(Error::TooManyQubits { total: 25, cap: 24 })
        ));
        assert!(RegisterLayout::new(&[0], 0).is_err());
    }

    #[test]
    fn inverse_qft_of_uniform_is_zero() {
        for backend in [Backend::GateLevel, Backend::Fast] {
            let n = 3;
            let psi = vec![c(1.0 / 8f64.sqrt(), 0.0); 8];
            let mut s = StateVector::from_amplitudes(psi).unwrap();
            s.qft(QubitSlice::new(0, n), true, backend).unwrap();
            assert_abs_diff_eq!(s.amplitude(0).re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn adder_examples() {
        let sl = QubitSlice::new(0, 3);
        for backend in [Backend::GateLevel, Backend::Fast] {
            let mut s = StateVector::<f64>::basis(3, 5).unwrap();
            s.modular_add(sl, 2, false, backend).unwrap();
            assert_abs_diff_eq!(s.amplitude(7).norm(), 1.0, epsilon = 1e-12);
            let mut s = StateVector::<f64>::basis(3, 5).unwrap();
            s.modular_add(sl, 2, true, backend).unwrap();
            assert_abs_diff_eq!(s.amplitude(3).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn incrementer_wraps_and_respects_controls() {
        let sl = QubitSlice::new(0, 3);
        for backend in [Backend::GateLevel, Backend::Fast] {
            let mut s = StateVector::<f64>::basis(3, 7).unwrap();
            s.increment(sl, &[], backend).unwrap();
            assert_abs_diff_eq!(s.amplitude(0).re, 1.0, epsilon = 1e-12);
            let mut s = StateVector::<f64>::basis(4, 2).unwrap();
            s.increment(sl, &[Control::on(3)], backend).unwrap();
            assert_abs_diff_eq!(s.amplitude(2).re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn even_extension_of_delta_and_constant() {
        for backend in [Backend::GateLevel, Backend::Fast] {
            let mut s = StateVector::<f64>::embed_real(3, &[1.0, 0.0, 0.0, 0.0]).unwrap();
            s.even_extension(QubitSlice::new(0, 2), 2, backend).unwrap();
            let h = 0.5f64.sqrt();
            let expect = [h, 0.0, 0.0, 0.0, h, 0.0, 0.0, 0.0];
            for (a, e) in s.amplitudes().iter().zip(expect) {
                assert_abs_diff_eq!(a.re, e, epsilon = 1e-12);
                assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
            }
            let mut s = StateVector::<f64>::embed_real(3, &[0.5; 4]).unwrap();
            s.even_extension(QubitSlice::new(0, 2), 2, backend).unwrap();
            for a in s.amplitudes() {
                assert_abs_diff_eq!(a.re, 0.5 * h, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn even_extension_rejects_busy_ancilla() {
        let mut s = StateVector::<f64>::basis(3, 4).unwrap();
        assert!(matches!(
            s.even_extension(QubitSlice::new(0, 2), 2, Backend::Fast),
            Err(Error::AncillaNotZero(2))
        ));
    }

    #[test]
    fn state_prep_maps_zero_to_psi_and_back() {
        let psi: Vec<C> = vec![c(-0.5, 0.1), c(0.3, -0.4), c(0.2, 0.0), c(0.0, 0.0)];
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let psi: Arc<Vec<C>> = Arc::new(psi.iter().map(|a| a / norm).collect());
        let mut s = StateVector::<f64>::zero(2).unwrap();
        let op = Op::StatePrep {
            qubits: vec![0, 1],
            psi: psi.clone(),
            inverse: false,
            controls: vec![],
        };
        s.apply_op(&op, Backend::Fast).unwrap();
        for (a, b) in s.amplitudes().iter().zip(psi.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
        s.apply_op(&op.inverse(), Backend::Fast).unwrap();
        assert_abs_diff_eq!((s.amplitude(0) - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn state_prep_of_basis_zero_is_a_phase() {
        let psi = Arc::new(vec![c(0.0, 1.0), c(0.0, 0.0)]);
        let mut s = StateVector::<f64>::basis(1, 1).unwrap();
        let op = Op::StatePrep {
            qubits: vec![0],
            psi,
            inverse: false,
            controls: vec![],
        };
        s.apply_op(&op, Backend::Fast).unwrap();
        assert_abs_diff_eq!((s.amplitude(1) - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reflection_backends_agree() {
        let amps: Vec<C> = (0..8).map(|i| c(i as f64 + 1.0, -(i as f64)) / 20.0).collect();
        let a = StateVector::from_amplitudes(amps).unwrap();
        let op: Op<f64> = Op::ReflectZero { qubits: vec![0, 1, 2] };
        let (mut x, mut y) = (a.clone(), a.clone());
        x.apply_op(&op, Backend::GateLevel).unwrap();
        y.apply_op(&op, Backend::Fast).unwrap();
        assert_abs_diff_eq!((x.amplitude(0) + a.amplitude(0)).norm(), 0.0, epsilon = 1e-15);
        for (p, q) in x.amplitudes().iter().zip(y.amplitudes()) {
            assert_abs_diff_eq!((p - q).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn sampling_basis_state() {
        let s = StateVector::<f64>::zero(2).unwrap();
        let h = s.sample(&[0, 1], 100, 1).unwrap();
        assert_eq!(h.counts(), &[100, 0, 0, 0]);
    }

    #[test]
    fn sampling_is_deterministic_and_mergeable() {
        let mut s = StateVector::<f64>::zero(2).unwrap();
        s.apply_gate(Gate::H, 0, &[]).unwrap();
        s.apply_gate(Gate::H, 1, &[]).unwrap();
        let a = s.sample(&[0, 1], 1000, 42).unwrap();
        let b = s.sample(&[0, 1], 1000, 42).unwrap();
        assert_eq!(a, b);
        let mut m = a.clone();
        m.merge(&b).unwrap();
        assert_eq!(m.shots(), 2000);
        assert!(m.merge(&s.sample(&[0], 10, 1).unwrap()).is_err());
    }

    #[test]
    fn uniform_sampling_law_of_large_numbers() {
        let mut s = StateVector::<f64>::zero(2).unwrap();
        s.apply_gate(Gate::H, 0, &[]).unwrap();
        s.apply_gate(Gate::H, 1, &[]).unwrap();
        let shots = 1_000_000u64;
        let h = s.sample(&[0, 1], shots, 9).unwrap();
        let sigma = (shots as f64 * 0.25 * 0.75).sqrt();
        for &c in h.counts() {
            assert!((c as f64 - 0.25 * shots as f64).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn post_select_bell_and_product() {
        let mut s = StateVector::<f64>::zero(2).unwrap();
        s.apply_gate(Gate::H, 0, &[]).unwrap();
        s.apply_gate(Gate::X, 1, &[Control::on(0)]).unwrap();
        let (t, p) = s.post_select(&[0], 0).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.amplitude(0).re, 1.0, epsilon = 1e-15);

        let s = StateVector::<f64>::embed_real(2, &[0.6, 0.8]).unwrap();
        let (t, p) = s.post_select(&[1], 0).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);
        assert_eq!(t, s);
        assert!(matches!(s.post_select(&[1], 1), Err(Error::ZeroProbability)));
    }

    #[test]
    fn f32_backend_runs() {
        let mut s = StateVector::<f32>::zero(3).unwrap();
        s.apply_gate(Gate::H, 0, &[]).unwrap();
        s.qft(QubitSlice::new(0, 3), false, Backend::Fast).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-5);
    }
}
