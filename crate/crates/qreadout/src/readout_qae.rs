//! Amplitude-estimation readouts built on real quantum amplitude estimation
//! (RQAE): the shift oracle, the Grover operator, the iterative schedule and
//! the RSQAE, FSQAE and FSQAE2 readouts.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gridfn::{self, dft_coefficients, FourierCoefficients, GridFunction, NormalizedState};
use crate::readout_sampling::{
    extended_coefficients, extended_spec, extension_magnitude_circuit, extension_series, magnitude_circuit, Diagnostics,
    CoefficientEstimate, Engine, FsrBlock, Method, Reconstruction,
};
use crate::sampling::{binomial, rng_for, SimRng};
use crate::scalar::Real;
use crate::statevec::{Backend, Circuit, Control, Gate, Op, RegisterLayout, StateVector};

/// Quantity whose value the shift oracle encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleKind {
    /// Real-space amplitude `psi_j`.
    RealSpace,
    /// Real Fourier coefficient of the even extension.
    Extended,
    /// `Re c_k` of the plain DFT.
    FourierRe,
    /// `Im c_k` of the plain DFT.
    FourierIm,
}

/// Oracle `A` whose all-zeros amplitude is `(a + b) / 2`.
///
/// Qubits `0..work` hold the inner circuit; qubit `work` is the shift ancilla.
#[derive(Clone, Debug)]
pub struct ShiftOracle<T> {
    kind: OracleKind,
    index: Vec<usize>,
    shift: T,
    work: usize,
    inner: Circuit<T>,
    unmap: Circuit<T>,
}

impl<T: Real> ShiftOracle<T> {
    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn n_qubits(&self) -> usize {
        self.work + 1
    }

    pub fn with_shift(&self, b: T) -> Result<Self> {
        if !(b.abs() <= T::one()) {
            return Err(invalid(format!("shift {b} outside [-1, 1]")));
        }
        Ok(Self {
            shift: b,
            ..self.clone()
        })
    }

    /// The circuit `A`.
    pub fn circuit(&self) -> Circuit<T> {
        let s = self.work;
        let on = [Control::on(s)];
        let mut c = Circuit::new();
        c.gate(Gate::H, s, &[]);
        c.extend(&self.inner.controlled(&on));
        c.extend(&self.unmap.controlled(&on));
        let theta = T::lit(2.0) * self.shift.acos();
        c.gate(Gate::Ry(theta), 0, &[Control::off(s)]);
        c.gate(Gate::H, s, &[]);
        c
    }
}

/// Builds the shift oracle for `kind` at `index`, a multi-index into the
/// grid (extended grid for [`OracleKind::Extended`]).
pub fn build_shift_oracle<T: Real>(
    state: &NormalizedState<T>,
    kind: OracleKind,
    index: &[usize],
    b: T,
) -> Result<ShiftOracle<T>> {
    let spec = state.spec();
    let dims = spec.qubits().to_vec();
    let psi = Arc::new(state.complex_amplitudes());
    let check = |sizes: Vec<usize>| -> Result<()> {
        if index.len() != sizes.len() || index.iter().zip(&sizes).any(|(&k, &n)| k >= n) {
            return Err(Error::IndexOutOfRange(format!("{index:?} for sizes {sizes:?}")));
        }
        Ok(())
    };
    let subtract = |layout: &RegisterLayout| -> Circuit<T> {
        let mut c = Circuit::new();
        for (l, &k) in index.iter().enumerate() {
            if k != 0 {
                c.push(Op::ModAdd {
                    slice: layout.register(l),
                    j: k,
                    inverse: true,
                    controls: vec![],
                });
            }
        }
        c
    };
    let (work, inner, unmap) = match kind {
        OracleKind::RealSpace => {
            check(spec.sizes())?;
            let layout = RegisterLayout::new(&dims, 0)?;
            let mut inner = Circuit::new();
            inner.push(Op::StatePrep {
                qubits: layout.data().qubits(),
                psi,
                inverse: false,
                controls: vec![],
            });
            (layout.total(), inner, subtract(&layout))
        }
        OracleKind::Extended => {
            check(extended_spec(spec)?.sizes())?;
            let (layout, inner) = extension_magnitude_circuit(&dims, psi)?;
            (layout.total(), inner, subtract(&layout))
        }
        OracleKind::FourierRe | OracleKind::FourierIm => {
            check(spec.sizes())?;
            let layout = RegisterLayout::new(&dims, 1)?;
            let inner = magnitude_circuit(&layout, psi)?;
            let mut unmap = subtract(&layout);
            if kind == OracleKind::FourierIm {
                unmap.gate(Gate::X, layout.ancilla(0), &[]);
            }
            (layout.total(), inner, unmap)
        }
    };
    // Qubit-cap check including the shift ancilla.
    RegisterLayout::new(&[work], 1)?;
    Ok(ShiftOracle {
        kind,
        index: index.to_vec(),
        shift: T::zero(),
        work,
        inner,
        unmap,
    }
    .with_shift(b)?)
}

/// Exact value of the quantity an oracle encodes.
pub fn exact_target<T: Real>(state: &NormalizedState<T>, kind: OracleKind, index: &[usize]) -> Result<T> {
    let spec = state.spec();
    match kind {
        OracleKind::RealSpace => {
            let j = spec.index(index)?;
            Ok(state.amplitudes()[j])
        }
        OracleKind::Extended => {
            let (ext, chat, _) = extended_coefficients(state)?;
            Ok(chat[ext.index(index)?])
        }
        OracleKind::FourierRe | OracleKind::FourierIm => {
            let c = dft_coefficients(state).coeffs()[spec.index(index)?];
            Ok(if kind == OracleKind::FourierRe { c.re } else { c.im })
        }
    }
}

/// Grover operator `Q = -A S_0 A^dagger S_0` with `S_0 = I - 2|0><0|`.
pub fn grover_circuit<T: Real>(a: &Circuit<T>, n_qubits: usize) -> Circuit<T> {
    let all: Vec<usize> = (0..n_qubits).collect();
    let mut q = Circuit::new();
    q.push(Op::ReflectZero { qubits: all.clone() });
    q.extend(&a.inverse());
    q.push(Op::ReflectZero { qubits: all });
    q.extend(a);
    q.push(Op::GlobalPhase {
        phase: T::PI(),
        controls: vec![],
    });
    q
}

/// Applies `Q^k` of the oracle to `state`.
pub fn grover_apply<T: Real>(oracle: &ShiftOracle<T>, state: &mut StateVector<T>, k: u64, backend: Backend) -> Result<()> {
    if state.n_qubits() != oracle.n_qubits() {
        return Err(Error::ShapeMismatch("state and oracle qubit counts differ".into()));
    }
    let q = grover_circuit(&oracle.circuit(), oracle.n_qubits());
    for _ in 0..k {
        q.apply(state, backend)?;
    }
    Ok(())
}

/// Source of good-state probabilities `|<0|Q^k A(b)|0>|^2`.
pub trait AmplitudeOracle {
    fn good_probability(&mut self, shift: f64, power: u64) -> Result<f64>;
}

/// Oracle with a known target; uses `sin^2((2k+1) asin((a+b)/2))`.
#[derive(Clone, Copy, Debug)]
pub struct KnownAmplitude(pub f64);

impl AmplitudeOracle for KnownAmplitude {
    fn good_probability(&mut self, shift: f64, power: u64) -> Result<f64> {
        let x = ((self.0 + shift) / 2.0).clamp(-1.0, 1.0);
        Ok(((2 * power + 1) as f64 * x.asin()).sin().powi(2))
    }
}

/// Statevector simulation of `Q^k A|0>`.
#[derive(Clone, Debug)]
pub struct SimulatedOracle<T> {
    pub oracle: ShiftOracle<T>,
    pub backend: Backend,
}

impl<T: Real> AmplitudeOracle for SimulatedOracle<T> {
    fn good_probability(&mut self, shift: f64, power: u64) -> Result<f64> {
        let oracle = self.oracle.with_shift(T::lit(shift))?;
        let mut sv = StateVector::zero(oracle.n_qubits())?;
        oracle.circuit().apply(&mut sv, self.backend)?;
        grover_apply(&oracle, &mut sv, power, self.backend)?;
        Ok(sv.amplitude(0).norm_sqr().as_f64())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RqaeConfig {
    /// Target half-width of the final interval.
    pub epsilon: f64,
    /// Total failure probability.
    pub gamma: f64,
    /// Amplification policy: Grover power grows at most by this factor.
    pub q: u64,
    /// Shift of the sign-fixing first iteration.
    pub first_shift: f64,
    /// Probability precision of the first iteration.
    pub first_epsilon: f64,
    pub max_iterations: usize,
}

impl RqaeConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            gamma: 0.05,
            q: 2,
            first_shift: 0.5,
            first_epsilon: 0.1,
            max_iterations: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(invalid(format!("epsilon {} outside (0, 0.5)", self.epsilon)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if self.q < 2 {
            return Err(invalid("amplification policy q must be at least 2"));
        }
        if !(self.first_shift > 0.0 && self.first_shift <= 1.0) || !(self.first_epsilon > 0.0) {
            return Err(invalid("first-iteration shift must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RqaeResult {
    pub estimate: f64,
    pub half_width: f64,
    /// Applications of `A` or `A^dagger`.
    pub queries: u64,
    pub max_power: u64,
    pub iterations: usize,
}

/// Shots for a two-sided Hoeffding bound of width `eps` at confidence `1 - gamma`.
pub fn hoeffding_shots(gamma: f64, eps: f64) -> u64 {
    ((2.0 / gamma).ln() / (2.0 * eps * eps)).ceil() as u64
}

fn hoeffding_width(gamma: f64, n: u64) -> f64 {
    ((2.0 / gamma).ln() / (2.0 * n as f64)).sqrt()
}

/// Runs the RQAE schedule against `oracle`.
pub fn rqae<O: AmplitudeOracle + ?Sized>(oracle: &mut O, cfg: &RqaeConfig, rng: &mut SimRng) -> Result<RqaeResult> {
    cfg.validate()?;
    let gamma_i = |i: usize| cfg.gamma * 6.0 / (std::f64::consts::PI.powi(2) * (i * i) as f64);
    let eps_p = 0.5 * (std::f64::consts::PI / (2.0 * cfg.q as f64)).sin().powi(2);
    let b = cfg.first_shift;

    let g = gamma_i(1) / 2.0;
    let n = hoeffding_shots(g, cfg.first_epsilon);
    let e = hoeffding_width(g, n);
    let pp = binomial(rng, n, oracle.good_probability(b, 0)?) as f64 / n as f64;
    let pm = binomial(rng, n, oracle.good_probability(-b, 0)?) as f64 / n as f64;
    let mut queries = 2 * n;
    let mut lo = ((pp - e - (pm + e)) / b).max(-1.0);
    let mut hi = ((pp + e - (pm - e)) / b).min(1.0);
    let (mut i, mut k_prev, mut max_power) = (1usize, 0u64, 0u64);

    while (hi - lo) / 2.0 > cfg.epsilon {
        i += 1;
        if i > cfg.max_iterations {
            return Err(Error::ScheduleExhausted {
                iterations: i - 1,
                half_width: (hi - lo) / 2.0,
            });
        }
        let theta_max = ((hi - lo) / 2.0).min(1.0).asin();
        let mut k = (std::f64::consts::PI / (4.0 * theta_max) - 0.5).floor().max(0.0) as u64;
        if k_prev > 0 {
            k = k.min(cfg.q * k_prev);
        }
        let g = gamma_i(i);
        let n = hoeffding_shots(g, eps_p);
        let e = hoeffding_width(g, n);
        let p = binomial(rng, n, oracle.good_probability(-lo, k)?) as f64 / n as f64;
        queries += n * (2 * k + 1);
        let odd = (2 * k + 1) as f64;
        let t_lo = (p - e).max(0.0).sqrt().asin() / odd;
        let t_hi = ((p + e).min(1.0).sqrt().asin() / odd).min(theta_max);
        let new_lo = (lo + 2.0 * t_lo.sin()).max(lo);
        let new_hi = (lo + 2.0 * t_hi.sin()).min(hi);
        lo = new_lo;
        hi = new_hi.max(new_lo);
        k_prev = k_prev.max(k);
        max_power = max_power.max(k);
    }
    Ok(RqaeResult {
        estimate: (lo + hi) / 2.0,
        half_width: (hi - lo) / 2.0,
        queries,
        max_power,
        iterations: i,
    })
}

/// RQAE of one oracle target. `Engine::Analytic` uses the exact target with
/// the closed-form Grover law; `Engine::Circuit` simulates every circuit.
pub fn rqae_estimate<T: Real>(
    state: &NormalizedState<T>,
    kind: OracleKind,
    index: &[usize],
    cfg: &RqaeConfig,
    seed: u64,
    engine: Engine,
) -> Result<RqaeResult> {
    let mut rng = rng_for(seed, &[kind as u64]);
    match engine {
        Engine::Analytic => rqae(&mut KnownAmplitude(exact_target(state, kind, index)?.as_f64()), cfg, &mut rng),
        Engine::Circuit(backend) => {
            let mut o = SimulatedOracle {
                oracle: build_shift_oracle(state, kind, index, T::zero())?,
                backend,
            };
            rqae(&mut o, cfg, &mut rng)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QaeConfig {
    pub rqae: RqaeConfig,
    pub seed: u64,
    pub engine: Engine,
}

impl QaeConfig {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self {
            rqae: RqaeConfig::new(epsilon),
            seed,
            engine: Engine::Analytic,
        }
    }
}

fn coefficient_seed(seed: u64, tag: u64, flat: usize) -> u64 {
    crate::sampling::derive_seed(seed, &[tag, flat as u64])
}

fn estimate_many<T: Real>(
    state: &NormalizedState<T>,
    kind: OracleKind,
    indices: &[Vec<usize>],
    flat: &[usize],
    cfg: &QaeConfig,
) -> Result<Vec<RqaeResult>> {
    indices
        .par_iter()
        .zip(flat.par_iter())
        .map(|(idx, &f)| rqae_estimate(state, kind, idx, &cfg.rqae, coefficient_seed(cfg.seed, kind as u64, f), cfg.engine))
        .collect()
}

/// Per-target RQAE of `psi_j`; values `A_N a_j` at the targets and zero
/// elsewhere. `None` reads every grid point.
pub fn rsqae_readout<T: Real>(
    state: &NormalizedState<T>,
    targets: Option<&[usize]>,
    cfg: &QaeConfig,
) -> Result<Reconstruction<T>> {
    let spec = state.spec();
    let flat: Vec<usize> = match targets {
        Some(t) => t.to_vec(),
        None => (0..spec.len()).collect(),
    };
    let indices = flat
        .iter()
        .map(|&f| {
            if f >= spec.len() {
                Err(Error::IndexOutOfRange(format!("target {f} of {}", spec.len())))
            } else {
                Ok(spec.multi_index_unchecked(f))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let results = estimate_many(state, OracleKind::RealSpace, &indices, &flat, cfg)?;
    let mut values = vec![T::zero(); spec.len()];
    for (&f, r) in flat.iter().zip(&results) {
        values[f] = state.norm() * T::lit(r.estimate);
    }
    Ok(Reconstruction {
        function: GridFunction::new(spec.clone(), values)?,
        method: Method::Rsqae,
        shots: 0,
        queries: results.iter().map(|r| r.queries).sum(),
        truncation: spec.sizes(),
        diagnostics: Diagnostics::default(),
    })
}

/// RQAE of every real extended coefficient in `[0, M)^d`, then the cosine
/// series restricted to the original grid.
pub fn fsqae_readout<T: Real>(state: &NormalizedState<T>, m: &[usize], cfg: &QaeConfig) -> Result<Reconstruction<T>> {
    let spec = state.spec();
    let ext = extended_spec(spec)?;
    if m.len() != spec.dim() || m.iter().zip(spec.sizes()).any(|(&ml, n)| ml == 0 || ml > n) {
        return Err(invalid(format!("truncation {m:?} outside 1..=N per dimension")));
    }
    let lists: Vec<Vec<usize>> = m.iter().map(|&ml| (0..ml).collect()).collect();
    let indices = block_indices(&lists);
    let flat = indices.iter().map(|k| ext.index(k)).collect::<Result<Vec<_>>>()?;
    let results = estimate_many(state, OracleKind::Extended, &indices, &flat, cfg)?;
    let est: Vec<T> = results.iter().map(|r| T::lit(r.estimate)).collect();
    let coefficients = indices
        .iter()
        .zip(&est)
        .map(|(k, &re)| CoefficientEstimate {
            k: k.iter().map(|&v| v as i64).collect(),
            re,
            im: T::zero(),
            sign_re: sign(re),
            sign_im: 0,
        })
        .collect();
    Ok(Reconstruction {
        function: extension_series(state, &ext, m, &est)?,
        method: Method::Fsqae,
        shots: 0,
        queries: results.iter().map(|r| r.queries).sum(),
        truncation: m.to_vec(),
        diagnostics: Diagnostics {
            coefficients,
            ..Diagnostics::default()
        },
    })
}

fn sign<T: Real>(v: T) -> i8 {
    if v < T::zero() {
        -1
    } else {
        1
    }
}

/// Index lists in dimension-1-fastest order.
fn block_indices(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let total: usize = lists.iter().map(Vec::len).product();
    (0..total)
        .map(|mut r| {
            lists
                .iter()
                .map(|l| {
                    let v = l[r % l.len()];
                    r /= l.len();
                    v
                })
                .collect()
        })
        .collect()
}

/// Two RQAE runs (real and imaginary part) per coefficient of the dominant
/// block, then the truncated Fourier series.
pub fn fsqae2_readout<T: Real>(state: &NormalizedState<T>, m: &[usize], cfg: &QaeConfig) -> Result<Reconstruction<T>> {
    let spec = state.spec();
    let block = FsrBlock::new(spec, m)?;
    // Entries with k_l = -M_l lie outside the reconstructed range.
    let keep: Vec<usize> = (0..block.len())
        .filter(|&b| block.signed[b].iter().zip(m).all(|(&k, &ml)| k.unsigned_abs() < ml as u64))
        .collect();
    let indices: Vec<Vec<usize>> = keep
        .iter()
        .map(|&b| spec.multi_index_unchecked(block.flat[b]))
        .collect();
    let flat: Vec<usize> = keep.iter().map(|&b| block.flat[b]).collect();
    let re = estimate_many(state, OracleKind::FourierRe, &indices, &flat, cfg)?;
    let im = estimate_many(state, OracleKind::FourierIm, &indices, &flat, cfg)?;
    let mut table = vec![Complex::new(T::zero(), T::zero()); spec.len()];
    for ((&f, r), i) in flat.iter().zip(&re).zip(&im) {
        table[f] = Complex::new(T::lit(r.estimate), T::lit(i.estimate));
    }
    let coefficients = keep
        .iter()
        .zip(re.iter().zip(&im))
        .map(|(&b, (r, i))| {
            let (re, im) = (T::lit(r.estimate), T::lit(i.estimate));
            CoefficientEstimate {
                k: block.signed[b].clone(),
                re,
                im,
                sign_re: sign(re),
                sign_im: sign(im),
            }
        })
        .collect();
    let coeffs = FourierCoefficients::new(spec.clone(), table, state.norm())?;
    let rec = gridfn::reconstruct(&coeffs, m)?;
    Ok(Reconstruction {
        function: rec.function,
        method: Method::Fsqae2,
        shots: 0,
        queries: re.iter().chain(&im).map(|r| r.queries).sum(),
        truncation: m.to_vec(),
        diagnostics: Diagnostics {
            coefficients,
            max_imag: rec.max_imag,
            folded_magnitude: rec.folded_magnitude,
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{encode, GridSpec};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_state(qubits: &[usize], seed: u64) -> NormalizedState<f64> {
        let mut rng = rng_for(seed, &[]);
        let spec = GridSpec::unit(qubits).unwrap();
        let v: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        encode(&GridFunction::new(spec, v).unwrap()).unwrap()
    }

    fn zero_amplitude(o: &ShiftOracle<f64>, backend: Backend) -> Complex<f64> {
        let mut sv = StateVector::zero(o.n_qubits()).unwrap();
        o.circuit().apply(&mut sv, backend).unwrap();
        sv.amplitude(0)
    }

    #[test]
    fn real_space_oracle_on_basis_state() {
        let f = GridFunction::new(GridSpec::unit(&[2]).unwrap(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = encode(&f).unwrap();
        let o = build_shift_oracle(&s, OracleKind::RealSpace, &[0], 0.0).unwrap();
        assert_abs_diff_eq!(zero_amplitude(&o, Backend::Fast).re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn shifted_amplitude() {
        let f = GridFunction::new(GridSpec::unit(&[1]).unwrap(), vec![0.6, 0.8]).unwrap();
        let s = encode(&f).unwrap();
        let o = build_shift_oracle(&s, OracleKind::RealSpace, &[0], 0.2).unwrap();
        assert_abs_diff_eq!(zero_amplitude(&o, Backend::Fast).re, 0.4, epsilon = 1e-14);
    }

    #[test]
    fn oracle_amplitudes_match_targets() {
        let s = random_state(&[2, 2], 9);
        let (ext, _, _) = extended_coefficients(&s).unwrap();
        for backend in [Backend::Fast, Backend::GateLevel] {
            for kind in [OracleKind::RealSpace, OracleKind::FourierRe, OracleKind::FourierIm, OracleKind::Extended] {
                let sizes = if kind == OracleKind::Extended { ext.sizes() } else { s.spec().sizes() };
                for idx in [vec![0, 0], vec![1, 2], vec![sizes[0] - 1, 1]] {
                    let a = exact_target(&s, kind, &idx).unwrap();
                    for b in [0.0, -0.3, 0.7] {
                        let o = build_shift_oracle(&s, kind, &idx, b).unwrap();
                        let z = zero_amplitude(&o, backend);
                        assert_abs_diff_eq!(z.re, (a + b) / 2.0, epsilon = 1e-10);
                        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn grover_power_law() {
        let f = GridFunction::new(GridSpec::unit(&[1]).unwrap(), vec![1.0, 0.0]).unwrap();
        let s = encode(&f).unwrap();
        // a = 1, b = 0: amplitude 1/2 = sin(pi/6); one Grover step gives 1.
        let o = build_shift_oracle(&s, OracleKind::RealSpace, &[0], 0.0).unwrap();
        let mut sv = StateVector::zero(o.n_qubits()).unwrap();
        o.circuit().apply(&mut sv, Backend::Fast).unwrap();
        let before = sv.clone();
        grover_apply(&o, &mut sv, 0, Backend::Fast).unwrap();
        assert_eq!(sv.amplitudes(), before.amplitudes());
        grover_apply(&o, &mut sv, 1, Backend::Fast).unwrap();
        assert_abs_diff_eq!(sv.amplitude(0).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn simulated_oracle_matches_closed_form() {
        let s = random_state(&[3], 4);
        let a = exact_target(&s, OracleKind::RealSpace, &[5]).unwrap();
        let mut sim = SimulatedOracle {
            oracle: build_shift_oracle(&s, OracleKind::RealSpace, &[5], 0.0).unwrap(),
            backend: Backend::Fast,
        };
        let mut known = KnownAmplitude(a);
        for k in 0..6 {
            for b in [0.5, -0.5, 0.1] {
                assert_abs_diff_eq!(
                    sim.good_probability(b, k).unwrap(),
                    known.good_probability(b, k).unwrap(),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn rqae_zero_amplitude() {
        let cfg = RqaeConfig::new(0.01);
        let r = rqae(&mut KnownAmplitude(0.0), &cfg, &mut rng_for(1, &[])).unwrap();
        assert!(r.estimate.abs() <= 0.01);
        assert!(r.half_width <= 0.01);
        assert!(r.queries > 0);
    }

    #[test]
    fn rqae_rejects_bad_config() {
        let mut o = KnownAmplitude(0.1);
        let mut rng = rng_for(0, &[]);
        assert!(rqae(&mut o, &RqaeConfig::new(0.7), &mut rng).is_err());
        let mut cfg = RqaeConfig::new(0.01);
        cfg.q = 1;
        assert!(rqae(&mut o, &cfg, &mut rng).is_err());
    }

    #[test]
    fn rqae_exhaustion_is_reported() {
        let mut cfg = RqaeConfig::new(1e-6);
        cfg.max_iterations = 3;
        let e = rqae(&mut KnownAmplitude(0.2), &cfg, &mut rng_for(2, &[])).unwrap_err();
        assert!(matches!(e, Error::ScheduleExhausted { .. }));
    }

    #[test]
    fn fsqae_constant_function() {
        let f = GridFunction::new(GridSpec::unit(&[3]).unwrap(), vec![2.0; 8]).unwrap();
        let s = encode(&f).unwrap();
        let r = fsqae_readout(&s, &[4], &QaeConfig::new(0.005, 3)).unwrap();
        let a = s.norm();
        for v in r.function.values() {
            assert!((v - 2.0f64).abs() <= 4.0 * 0.005 * a, "{v}");
        }
    }

    #[test]
    fn fsqae2_real_spectrum_has_small_imaginary_estimates() {
        // Even sequence: real DFT.
        let v = vec![1.0, 0.5, 0.2, 0.5];
        let s = encode(&GridFunction::new(GridSpec::unit(&[2]).unwrap(), v).unwrap()).unwrap();
        for k in 0..2 {
            let r = rqae_estimate(&s, OracleKind::FourierIm, &[k], &RqaeConfig::new(0.01), 5, Engine::Analytic).unwrap();
            assert!(r.estimate.abs() <= 0.01);
        }
        let r = fsqae2_readout(&s, &[2], &QaeConfig::new(0.01, 1)).unwrap();
        assert!(r.queries > 0);
    }

    #[test]
    fn rsqae_queries_are_additive() {
        let s = random_state(&[3], 2);
        let cfg = QaeConfig::new(0.02, 8);
        let one = rsqae_readout(&s, Some(&[3]), &cfg).unwrap();
        let all = rsqae_readout(&s, None, &cfg).unwrap();
        let ratio = all.queries as f64 / (8.0 * one.queries as f64);
        assert!((0.8..1.25).contains(&ratio), "{ratio}");
    }
}
