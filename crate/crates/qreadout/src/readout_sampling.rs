//! Sampling-based readouts: real-space (RSR), approximate real-space (ARSR)
//! and the modified Fourier-space readout (FSR), with and without the even
//! extension.
//!
//! Every readout draws from an outcome law that is either computed in closed
//! form from the amplitudes ([`Engine::Analytic`]) or from a simulated
//! circuit ([`Engine::Circuit`]).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gridfn::{self, dft_coefficients, fftn, FourierCoefficients, GridFunction, GridSpec, NormalizedState};
use crate::sampling::{multinomial, rng_for, SimRng};
use crate::scalar::{from_usize, Real};
use crate::spline::{interpolate_tensor, SplineOrder};
use crate::statevec::{Backend, Circuit, Control, Gate, Op, RegisterLayout, StateVector};

/// Readout method tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rsr,
    Arsr,
    Fsr,
    ExtFsr,
    Rsqae,
    Fsqae,
    Fsqae2,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Rsr,
        Method::Arsr,
        Method::Fsr,
        Method::ExtFsr,
        Method::Rsqae,
        Method::Fsqae,
        Method::Fsqae2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rsr => "rsr",
            Method::Arsr => "arsr",
            Method::Fsr => "fsr",
            Method::ExtFsr => "extfsr",
            Method::Rsqae => "rsqae",
            Method::Fsqae => "fsqae",
            Method::Fsqae2 => "fsqae2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| invalid(format!("unknown method {s:?}")))
    }
}

/// Source of outcome probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Engine {
    /// Closed-form outcome laws from the amplitudes and their DFT.
    #[default]
    Analytic,
    /// Statevector simulation of the readout circuits.
    Circuit(Backend),
}

/// Approximation parameters `M_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Truncation {
    Fixed(Vec<usize>),
    Adaptive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutConfig<T> {
    /// Shots per circuit; `None` uses exact probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    pub truncation: Truncation,
    /// Known lower bound subtracted before encoding; the state holds
    /// `f - shift`, which must be nonnegative for RSR and ARSR.
    pub shift: T,
    pub spline: SplineOrder,
    /// Confidence constant for flagging statistically unresolved signs.
    pub beta: T,
    /// Adaptive FSR keeps coefficients with more than `tau` counts.
    pub tau: T,
    /// Assumed decay order in the adaptive FSR block rule.
    pub p_hat: T,
    pub engine: Engine,
}

impl<T: Real> ReadoutConfig<T> {
    pub fn new(shots: u64, seed: u64) -> Self {
        Self {
            shots: Some(shots),
            seed,
            truncation: Truncation::Adaptive,
            shift: T::zero(),
            spline: SplineOrder::Cubic,
            beta: T::lit(5.0),
            tau: T::lit(4.0),
            p_hat: T::lit(2.0),
            engine: Engine::Analytic,
        }
    }

    /// Infinite-shot limit.
    pub fn exact() -> Self {
        Self {
            shots: None,
            ..Self::new(1, 0)
        }
    }

    pub fn fixed(mut self, m: &[usize]) -> Self {
        self.truncation = Truncation::Fixed(m.to_vec());
        self
    }

    pub fn with_shift(mut self, shift: T) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_spline(mut self, order: SplineOrder) -> Self {
        self.spline = order;
        self
    }

    fn shots_consumed(&self, circuits: u64) -> u64 {
        self.shots.map_or(0, |s| s * circuits)
    }
}

/// One estimated Fourier coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientEstimate<T> {
    /// Signed wavenumber.
    pub k: Vec<i64>,
    pub re: T,
    pub im: T,
    pub sign_re: i8,
    pub sign_im: i8,
}

impl<T: Real> CoefficientEstimate<T> {
    pub fn abs(&self) -> T {
        self.re.hypot(self.im)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics<T> {
    /// `err_k` of the adaptive ARSR rule, one per compared level pair.
    pub arsr_errors: Vec<T>,
    pub coefficients: Vec<CoefficientEstimate<T>>,
    /// Signs decided by an exact count tie (set to `+`).
    pub sign_ties: usize,
    /// Signs whose count difference is below `beta` standard deviations.
    pub uncertain_signs: usize,
    /// Coefficients kept after the adaptive cutoff.
    pub kept: usize,
    pub max_imag: T,
    pub folded_magnitude: T,
}

#[derive(Clone, Debug)]
pub struct Reconstruction<T> {
    pub function: GridFunction<T>,
    pub method: Method,
    /// Total shots over all circuits.
    pub shots: u64,
    /// Oracle queries (amplitude-estimation methods).
    pub queries: u64,
    pub truncation: Vec<usize>,
    pub diagnostics: Diagnostics<T>,
}

const STREAM_REAL: u64 = 1;
const STREAM_COARSE: u64 = 2;
const STREAM_MAGNITUDE: u64 = 3;
const STREAM_SIGN: u64 = 4;

fn frequencies(probs: &[f64], shots: Option<u64>, rng: &mut SimRng) -> Vec<f64> {
    match shots {
        None => probs.to_vec(),
        Some(s) => {
            let n = s as f64;
            multinomial(rng, s, probs).into_iter().map(|c| c as f64 / n).collect()
        }
    }
}

fn prepared_state<T: Real>(state: &NormalizedState<T>, n_qubits: usize, qubits: Vec<usize>) -> Result<StateVector<T>> {
    let mut sv = StateVector::zero(n_qubits)?;
    sv.apply_op(
        &Op::StatePrep {
            qubits,
            psi: Arc::new(state.complex_amplitudes()),
            inverse: false,
            controls: vec![],
        },
        Backend::Fast,
    )?;
    Ok(sv)
}

fn squared_amplitudes<T: Real>(sv: &StateVector<T>) -> Vec<f64> {
    sv.amplitudes().iter().map(|a| a.norm_sqr().as_f64()).collect()
}

fn check_power_of_two_truncation<T: Real>(spec: &GridSpec<T>, m: &[usize], cap_factor: usize) -> Result<()> {
    if m.len() != spec.dim() {
        return Err(Error::ShapeMismatch("one approximation parameter per dimension".into()));
    }
    for (l, (&ml, n)) in m.iter().zip(spec.sizes()).enumerate() {
        if ml == 0 || !ml.is_power_of_two() {
            return Err(invalid(format!("M_{} = {ml} is not a power of two", l + 1)));
        }
        if 2 * ml > n * cap_factor {
            return Err(invalid(format!("M_{} = {ml} exceeds {}", l + 1, n * cap_factor / 2)));
        }
    }
    Ok(())
}

/// Cartesian product of per-dimension index lists, dimension 1 fastest.
fn product(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for &v in list {
            for prefix in &out {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    // Reorder so that dimension 1 varies fastest.
    out.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    out
}

// ---------------------------------------------------------------------------
// Real-space readouts
// ---------------------------------------------------------------------------

fn real_space_law<T: Real>(state: &NormalizedState<T>, engine: Engine) -> Result<Vec<f64>> {
    match engine {
        Engine::Analytic => Ok(state.amplitudes().iter().map(|a| (*a * *a).as_f64()).collect()),
        Engine::Circuit(_) => {
            let n = state.spec().total_qubits();
            Ok(squared_amplitudes(&prepared_state(state, n, (0..n).collect())?))
        }
    }
}

/// Full Z-basis sampling; values `A_N sqrt(p_j) + shift`.
pub fn rsr_readout<T: Real>(state: &NormalizedState<T>, cfg: &ReadoutConfig<T>) -> Result<Reconstruction<T>> {
    let probs = real_space_law(state, cfg.engine)?;
    let freq = frequencies(&probs, cfg.shots, &mut rng_for(cfg.seed, &[STREAM_REAL]));
    let a = state.norm();
    let values = freq.iter().map(|&p| a * T::lit(p.sqrt()) + cfg.shift).collect();
    Ok(Reconstruction {
        function: GridFunction::new(state.spec().clone(), values)?,
        method: Method::Rsr,
        shots: cfg.shots_consumed(1),
        queries: 0,
        truncation: state.spec().sizes(),
        diagnostics: Diagnostics::default(),
    })
}

/// Block averages used to post-process fine real-space values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Average {
    Rms,
    Mean,
    ShiftedHarmonic { delta: f64 },
    Fmf,
}

impl Average {
    pub const DEFAULT_SET: [Average; 4] = [
        Average::Rms,
        Average::Mean,
        Average::ShiftedHarmonic { delta: 0.1 },
        Average::Fmf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Average::Rms => "rms",
            Average::Mean => "mean",
            Average::ShiftedHarmonic { .. } => "shifted_harmonic",
            Average::Fmf => "fmf",
        }
    }

    pub fn apply<T: Real>(&self, v: &[T]) -> T {
        let n = from_usize::<T>(v.len());
        let sum = |f: &dyn Fn(T) -> T| v.iter().fold(T::zero(), |s, &x| s + f(x));
        match *self {
            Average::Rms => (sum(&|x| x * x) / n).sqrt(),
            Average::Mean => sum(&|x| x) / n,
            Average::ShiftedHarmonic { delta } => {
                let d = T::lit(delta);
                n / sum(&|x| T::one() / (x + d)) - d
            }
            Average::Fmf => (sum(&|x| x * x * x * x) / n).sqrt().sqrt(),
        }
    }
}

/// Averages fine grid values over blocks of `N_l / M_l` cells.
pub fn post_process<T: Real>(f: &GridFunction<T>, method: Average, m: &[usize]) -> Result<Vec<T>> {
    let spec = f.spec();
    let sizes = spec.sizes();
    if m.len() != sizes.len() {
        return Err(Error::ShapeMismatch("one block parameter per dimension".into()));
    }
    if m.iter().zip(&sizes).any(|(&ml, &n)| ml == 0 || n % ml != 0) {
        return Err(invalid("block counts must divide the grid size"));
    }
    let total: usize = m.iter().product();
    let mut cells: Vec<Vec<T>> = vec![Vec::new(); total];
    for (flat, &v) in f.values().iter().enumerate() {
        let j = spec.multi_index_unchecked(flat);
        let mut c = 0;
        let mut stride = 1;
        for ((&jl, &n), &ml) in j.iter().zip(&sizes).zip(m) {
            c += jl / (n / ml) * stride;
            stride *= ml;
        }
        cells[c].push(v);
    }
    Ok(cells.iter().map(|cell| method.apply(cell)).collect())
}

/// Cell centers `(k + 1/2 - M/(2N)) L / M` of the coarse grid per dimension.
pub fn coarse_centers<T: Real>(spec: &GridSpec<T>, m: &[usize]) -> Vec<Vec<T>> {
    m.iter()
        .zip(spec.sizes())
        .zip(spec.lengths())
        .map(|((&ml, n), &len)| {
            let off = T::lit(0.5) - from_usize::<T>(ml) / from_usize::<T>(2 * n);
            (0..ml)
                .map(|k| (from_usize::<T>(k) + off) * len / from_usize::<T>(ml))
                .collect()
        })
        .collect()
}

/// Interpolates coarse cell values to the full grid.
pub fn coarse_to_grid<T: Real>(spec: &GridSpec<T>, m: &[usize], coarse: &[T], order: SplineOrder) -> Result<GridFunction<T>> {
    let nodes = coarse_centers(spec, m);
    let targets: Vec<Vec<T>> = spec
        .sizes()
        .into_iter()
        .zip(spec.lengths())
        .map(|(n, &len)| (0..n).map(|j| from_usize::<T>(j) * len / from_usize::<T>(n)).collect())
        .collect();
    GridFunction::new(spec.clone(), interpolate_tensor(&nodes, coarse, &targets, order)?)
}

/// Marginal law of the `m_l` most significant qubits of every register.
fn coarse_law<T: Real>(state: &NormalizedState<T>, m: &[usize], engine: Engine) -> Result<Vec<f64>> {
    let spec = state.spec();
    let fine = real_space_law(state, engine)?;
    let sizes = spec.sizes();
    let total: usize = m.iter().product();
    let mut p = vec![0.0; total];
    for (flat, &pj) in fine.iter().enumerate() {
        let j = spec.multi_index_unchecked(flat);
        let mut c = 0;
        let mut stride = 1;
        for ((&jl, &n), &ml) in j.iter().zip(&sizes).zip(m) {
            c += jl / (n / ml) * stride;
            stride *= ml;
        }
        p[c] += pj;
    }
    Ok(p)
}

fn coarse_values<T: Real>(state: &NormalizedState<T>, freq: &[f64], m: &[usize]) -> Vec<T> {
    let ratio = m.iter().product::<usize>() as f64 / state.spec().len() as f64;
    let a = state.norm();
    freq.iter().map(|&p| a * T::lit((p * ratio).sqrt())).collect()
}

/// Sums a coarse frequency table over blocks to a coarser level.
fn aggregate(freq: &[f64], from: &[usize], to: &[usize]) -> Vec<f64> {
    let total: usize = to.iter().product();
    let mut out = vec![0.0; total];
    for (flat, &p) in freq.iter().enumerate() {
        let mut rem = flat;
        let mut c = 0;
        let mut stride = 1;
        for (&f, &t) in from.iter().zip(to) {
            let k = rem % f;
            rem /= f;
            c += k / (f / t) * stride;
            stride *= t;
        }
        out[c] += p;
    }
    out
}

/// ARSR at every level `M_l = 2^k`, `k = 1..=min n_l - 1`, all from one
/// histogram of the finest level.
pub fn arsr_level_sweep<T: Real>(
    state: &NormalizedState<T>,
    cfg: &ReadoutConfig<T>,
) -> Result<Vec<(Vec<usize>, GridFunction<T>)>> {
    let spec = state.spec();
    let kmax = spec.qubits().iter().copied().min().unwrap_or(0).saturating_sub(1);
    if kmax == 0 {
        return Err(invalid("adaptive ARSR needs at least two qubits per dimension"));
    }
    let finest = vec![1usize << kmax; spec.dim()];
    let probs = coarse_law(state, &finest, cfg.engine)?;
    let freq = frequencies(&probs, cfg.shots, &mut rng_for(cfg.seed, &[STREAM_COARSE]));
    (1..=kmax)
        .map(|k| {
            let m = vec![1usize << k; spec.dim()];
            let coarse = coarse_values(state, &aggregate(&freq, &finest, &m), &m);
            let mut f = coarse_to_grid(spec, &m, &coarse, cfg.spline)?;
            shift_values(&mut f, cfg.shift)?;
            Ok((m, f))
        })
        .collect()
}

fn shift_values<T: Real>(f: &mut GridFunction<T>, shift: T) -> Result<()> {
    if shift != T::zero() {
        let v = f.values().iter().map(|&x| x + shift).collect();
        *f = GridFunction::new(f.spec().clone(), v)?;
    }
    Ok(())
}

/// Measures only the most significant qubits; coarse RMS values at the cell
/// centers are spline-interpolated to the grid.
pub fn arsr_readout<T: Real>(state: &NormalizedState<T>, cfg: &ReadoutConfig<T>) -> Result<Reconstruction<T>> {
    let spec = state.spec();
    match &cfg.truncation {
        Truncation::Fixed(m) => {
            check_power_of_two_truncation(spec, m, 1)?;
            let probs = coarse_law(state, m, cfg.engine)?;
            let freq = frequencies(&probs, cfg.shots, &mut rng_for(cfg.seed, &[STREAM_COARSE]));
            let mut f = coarse_to_grid(spec, m, &coarse_values(state, &freq, m), cfg.spline)?;
            shift_values(&mut f, cfg.shift)?;
            Ok(Reconstruction {
                function: f,
                method: Method::Arsr,
                shots: cfg.shots_consumed(1),
                queries: 0,
                truncation: m.clone(),
                diagnostics: Diagnostics::default(),
            })
        }
        Truncation::Adaptive => {
            let mut levels = arsr_level_sweep(state, cfg)?;
            let mut errors: Vec<T> = Vec::new();
            let mut chosen = levels.len() - 1;
            for k in 0..levels.len() - 1 {
                let diff: Vec<T> = levels[k + 1]
                    .1
                    .values()
                    .iter()
                    .zip(levels[k].1.values())
                    .map(|(&a, &b)| a - b)
                    .collect();
                let e = gridfn::norm2(&diff);
                if errors.last().is_some_and(|&prev| e > prev) {
                    errors.push(e);
                    chosen = k;
                    break;
                }
                errors.push(e);
            }
            let (m, f) = levels.swap_remove(chosen);
            Ok(Reconstruction {
                function: f,
                method: Method::Arsr,
                shots: cfg.shots_consumed(1),
                queries: 0,
                truncation: m,
                diagnostics: Diagnostics {
                    arsr_errors: errors,
                    ..Diagnostics::default()
                },
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Fourier-space readouts
// ---------------------------------------------------------------------------

/// Dominant coefficient block: `k_l in [0, M) u [N-M, N)` for `l < d` and
/// `k_d in [0, M)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FsrBlock {
    pub m: Vec<usize>,
    /// Flat grid indices of the block entries.
    pub flat: Vec<usize>,
    /// Signed wavenumbers of the block entries.
    pub signed: Vec<Vec<i64>>,
}

impl FsrBlock {
    pub fn new<T: Real>(spec: &GridSpec<T>, m: &[usize]) -> Result<Self> {
        check_power_of_two_truncation(spec, m, 1)?;
        let sizes = spec.sizes();
        let d = sizes.len();
        let lists: Vec<Vec<usize>> = (0..d)
            .map(|l| {
                let (n, ml) = (sizes[l], m[l]);
                if l + 1 < d {
                    let mut v: Vec<usize> = (0..ml).collect();
                    v.extend((n - ml..n).filter(|&k| k >= ml));
                    v
                } else {
                    (0..ml).collect()
                }
            })
            .collect();
        let ks = product(&lists);
        let flat = ks.iter().map(|k| spec.index(k).expect("block index in range")).collect();
        let signed = ks
            .iter()
            .map(|k| {
                k.iter()
                    .zip(&sizes)
                    .map(|(&kl, &n)| if kl >= n / 2 && kl > 0 { kl as i64 - n as i64 } else { kl as i64 })
                    .collect()
            })
            .collect();
        Ok(Self {
            m: m.to_vec(),
            flat,
            signed,
        })
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }
}

/// `|Re c_k|` and `|Im c_k|` estimates over the block.
#[derive(Clone, Debug)]
pub struct MagnitudeTable<T> {
    pub block: FsrBlock,
    pub re: Vec<T>,
    pub im: Vec<T>,
    /// Raw frequencies `(re, im)` per block entry.
    pub freq: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignTable {
    pub re: Vec<i8>,
    pub im: Vec<i8>,
    pub ties: usize,
    pub uncertain: usize,
}

/// Magnitude circuit: ancilla superposition, state preparation, inverse QFT
/// per register, controlled negation `k -> -k`, and a phase that makes the
/// imaginary branch real.
pub fn magnitude_circuit<T: Real>(layout: &RegisterLayout, psi: Arc<Vec<Complex<T>>>) -> Result<Circuit<T>> {
    if layout.ancillas() < 1 {
        return Err(Error::InvalidLayout("magnitude circuit needs one ancilla".into()));
    }
    let anc = layout.ancilla(0);
    let on = [Control::on(anc)];
    let mut c = Circuit::new();
    c.gate(Gate::H, anc, &[]);
    c.push(Op::StatePrep {
        qubits: layout.data().qubits(),
        psi,
        inverse: false,
        controls: vec![],
    });
    for l in 0..layout.dims().len() {
        c.push(Op::Qft {
            slice: layout.register(l),
            inverse: true,
            controls: vec![],
        });
    }
    for q in layout.data().qubits() {
        c.gate(Gate::X, q, &on);
    }
    for l in 0..layout.dims().len() {
        c.push(Op::Increment {
            slice: layout.register(l),
            inverse: false,
            controls: on.to_vec(),
        });
    }
    c.gate(Gate::H, anc, &[]);
    c.gate(Gate::Phase(-T::FRAC_PI_2()), anc, &[]);
    Ok(c)
}

/// Sign circuit: the magnitude circuit controlled on `r`, interfered with a
/// uniform reference over the dominant block prepared on `r = 0`.
pub fn sign_circuit<T: Real>(layout: &RegisterLayout, psi: Arc<Vec<Complex<T>>>, m: &[usize]) -> Result<Circuit<T>> {
    if layout.ancillas() < 2 {
        return Err(Error::InvalidLayout("sign circuit needs two ancillas".into()));
    }
    let d = layout.dims().len();
    if m.len() != d {
        return Err(Error::ShapeMismatch("one approximation parameter per dimension".into()));
    }
    let (q, r) = (layout.ancilla(0), layout.ancilla(1));
    let on_r = [Control::on(r)];
    let on_qr = [Control::on(q), Control::on(r)];
    let off_r = [Control::off(r)];
    let mut c = Circuit::new();
    c.gate(Gate::H, q, &[]);
    c.gate(Gate::H, r, &[]);
    c.push(Op::StatePrep {
        qubits: layout.data().qubits(),
        psi,
        inverse: false,
        controls: on_r.to_vec(),
    });
    for l in 0..d {
        c.push(Op::Qft {
            slice: layout.register(l),
            inverse: true,
            controls: on_r.to_vec(),
        });
    }
    for x in layout.data().qubits() {
        c.gate(Gate::X, x, &on_qr);
    }
    for l in 0..d {
        c.push(Op::Increment {
            slice: layout.register(l),
            inverse: false,
            controls: on_qr.to_vec(),
        });
    }
    c.gate(Gate::H, q, &[]);
    c.gate(Gate::Phase(-T::FRAC_PI_2()), q, &on_r);
    c.gate(Gate::H, q, &off_r);
    for l in 0..d {
        let reg = layout.register(l);
        let ml = m[l].trailing_zeros() as usize;
        for b in 0..ml {
            c.gate(Gate::H, reg.bit(b), &off_r);
        }
        if l + 1 < d {
            c.gate(Gate::H, reg.bit(ml), &off_r);
            c.push(Op::Increment {
                slice: reg.sub(ml, reg.len - ml),
                inverse: true,
                controls: off_r.to_vec(),
            });
        }
    }
    c.gate(Gate::H, r, &[]);
    Ok(c)
}

fn magnitude_law<T: Real>(
    state: &NormalizedState<T>,
    coeffs: &FourierCoefficients<T>,
    block: &FsrBlock,
    engine: Engine,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match engine {
        Engine::Analytic => Ok(block
            .flat
            .iter()
            .map(|&i| {
                let c = coeffs.coeffs()[i];
                ((c.re * c.re).as_f64(), (c.im * c.im).as_f64())
            })
            .unzip()),
        Engine::Circuit(backend) => {
            let layout = RegisterLayout::new(state.spec().qubits(), 1)?;
            let mut sv = StateVector::for_layout(&layout)?;
            magnitude_circuit(&layout, Arc::new(state.complex_amplitudes()))?.apply(&mut sv, backend)?;
            let p = squared_amplitudes(&sv);
            let n = state.spec().len();
            Ok(block.flat.iter().map(|&i| (p[i], p[i + n])).unzip())
        }
    }
}

/// Outcome law of the sign circuit over the block, in the order
/// `(r=0,q=0), (r=1,q=0), (r=0,q=1), (r=1,q=1)`.
fn sign_law<T: Real>(
    state: &NormalizedState<T>,
    coeffs: &FourierCoefficients<T>,
    block: &FsrBlock,
    engine: Engine,
) -> Result<[Vec<f64>; 4]> {
    match engine {
        Engine::Analytic => {
            let s = 1.0 / (2.0 * block.len() as f64).sqrt();
            let mut out: [Vec<f64>; 4] = Default::default();
            for &i in &block.flat {
                let c = coeffs.coeffs()[i];
                let (re, im) = (c.re.as_f64(), c.im.as_f64());
                out[0].push(0.25 * (re + s) * (re + s));
                out[1].push(0.25 * (re - s) * (re - s));
                out[2].push(0.25 * (im + s) * (im + s));
                out[3].push(0.25 * (im - s) * (im - s));
            }
            Ok(out)
        }
        Engine::Circuit(backend) => {
            let layout = RegisterLayout::new(state.spec().qubits(), 2)?;
            let mut sv = StateVector::for_layout(&layout)?;
            sign_circuit(&layout, Arc::new(state.complex_amplitudes()), &block.m)?.apply(&mut sv, backend)?;
            let p = squared_amplitudes(&sv);
            let n = state.spec().len();
            let mut out: [Vec<f64>; 4] = Default::default();
            for &i in &block.flat {
                out[0].push(p[i]);
                out[1].push(p[i + 2 * n]);
                out[2].push(p[i + n]);
                out[3].push(p[i + 3 * n]);
            }
            Ok(out)
        }
    }
}

fn sample_tables(laws: &[&[f64]], shots: Option<u64>, rng: &mut SimRng) -> Vec<Vec<f64>> {
    let flat: Vec<f64> = laws.iter().flat_map(|l| l.iter().copied()).collect();
    let freq = frequencies(&flat, shots, rng);
    let mut out = Vec::with_capacity(laws.len());
    let mut off = 0;
    for l in laws {
        out.push(freq[off..off + l.len()].to_vec());
        off += l.len();
    }
    out
}

fn decide_sign(plus: f64, minus: f64, shots: Option<u64>, beta: f64, ties: &mut usize, uncertain: &mut usize) -> i8 {
    if plus == minus {
        *ties += 1;
        return 1;
    }
    if let Some(s) = shots {
        let s = s as f64;
        let (a, b) = (plus * s, minus * s);
        if (a - b).abs() < beta * (a + b).sqrt() {
            *uncertain += 1;
        }
    }
    if plus > minus {
        1
    } else {
        -1
    }
}

/// Estimates `|Re c_k|` and `|Im c_k|` over the dominant block.
pub fn fsr_magnitudes<T: Real>(state: &NormalizedState<T>, m: &[usize], cfg: &ReadoutConfig<T>) -> Result<MagnitudeTable<T>> {
    let coeffs = dft_coefficients(state);
    let block = FsrBlock::new(state.spec(), m)?;
    magnitudes_with(state, &coeffs, block, cfg)
}

fn magnitudes_with<T: Real>(
    state: &NormalizedState<T>,
    coeffs: &FourierCoefficients<T>,
    block: FsrBlock,
    cfg: &ReadoutConfig<T>,
) -> Result<MagnitudeTable<T>> {
    let (pre, pim) = magnitude_law(state, coeffs, &block, cfg.engine)?;
    let t = sample_tables(&[&pre, &pim], cfg.shots, &mut rng_for(cfg.seed, &[STREAM_MAGNITUDE]));
    Ok(MagnitudeTable {
        re: t[0].iter().map(|&p| T::lit(p.sqrt())).collect(),
        im: t[1].iter().map(|&p| T::lit(p.sqrt())).collect(),
        freq: t[0].iter().copied().zip(t[1].iter().copied()).collect(),
        block,
    })
}

/// Determines the signs of `Re c_k` and `Im c_k` from the count difference
/// of the shifted sign circuit.
pub fn fsr_signs<T: Real>(state: &NormalizedState<T>, m: &[usize], cfg: &ReadoutConfig<T>) -> Result<SignTable> {
    let coeffs = dft_coefficients(state);
    let block = FsrBlock::new(state.spec(), m)?;
    signs_with(state, &coeffs, &block, cfg)
}

fn signs_with<T: Real>(
    state: &NormalizedState<T>,
    coeffs: &FourierCoefficients<T>,
    block: &FsrBlock,
    cfg: &ReadoutConfig<T>,
) -> Result<SignTable> {
    let law = sign_law(state, coeffs, block, cfg.engine)?;
    let t = sample_tables(
        &[&law[0], &law[1], &law[2], &law[3]],
        cfg.shots,
        &mut rng_for(cfg.seed, &[STREAM_SIGN]),
    );
    let beta = cfg.beta.as_f64();
    let (mut ties, mut uncertain) = (0, 0);
    let mut re = Vec::with_capacity(block.len());
    let mut im = Vec::with_capacity(block.len());
    for b in 0..block.len() {
        re.push(decide_sign(t[0][b], t[1][b], cfg.shots, beta, &mut ties, &mut uncertain));
        im.push(decide_sign(t[2][b], t[3][b], cfg.shots, beta, &mut ties, &mut uncertain));
    }
    Ok(SignTable {
        re,
        im,
        ties,
        uncertain,
    })
}

/// Adaptive block size `min(cap, 2^ceil(log2(shots) / (2 p - 1 + d)))`.
pub fn adaptive_block(shots: u64, p_hat: f64, d: usize, cap: usize) -> usize {
    let e = ((shots.max(1) as f64).log2() / (2.0 * p_hat - 1.0 + d as f64)).ceil();
    let m = 2f64.powf(e.max(0.0)) as usize;
    m.clamp(1, cap.max(1))
}

fn resolve_block<T: Real>(spec: &GridSpec<T>, cfg: &ReadoutConfig<T>, cap_factor: usize) -> Result<(Vec<usize>, bool)> {
    match &cfg.truncation {
        Truncation::Fixed(m) => Ok((m.clone(), false)),
        Truncation::Adaptive => {
            let cap = spec.sizes().into_iter().min().unwrap() * cap_factor / 2;
            let m = match cfg.shots {
                Some(s) => adaptive_block(s, cfg.p_hat.as_f64(), spec.dim(), cap),
                None => cap,
            };
            Ok((vec![m; spec.dim()], cfg.shots.is_some()))
        }
    }
}

/// Modified FSR: magnitudes and signs of the dominant coefficients, then the
/// truncated Fourier series with the negative-index rule.
pub fn fsr_readout<T: Real>(state: &NormalizedState<T>, cfg: &ReadoutConfig<T>) -> Result<Reconstruction<T>> {
    let spec = state.spec();
    let (m, cutoff) = resolve_block(spec, cfg, 1)?;
    let coeffs = dft_coefficients(state);
    let block = FsrBlock::new(spec, &m)?;
    let mags = magnitudes_with(state, &coeffs, block.clone(), cfg)?;
    let signs = signs_with(state, &coeffs, &block, cfg)?;
    let tau = cfg.tau.as_f64();
    let shots = cfg.shots.unwrap_or(0) as f64;
    let mut table = vec![Complex::new(T::zero(), T::zero()); spec.len()];
    let mut estimates = Vec::with_capacity(block.len());
    let mut kept = 0;
    for b in 0..block.len() {
        let (fr, fi) = mags.freq[b];
        let keep = !cutoff || (fr + fi) * shots > tau;
        let (re, im) = if keep {
            kept += 1;
            (
                mags.re[b] * T::lit(f64::from(signs.re[b])),
                mags.im[b] * T::lit(f64::from(signs.im[b])),
            )
        } else {
            (T::zero(), T::zero())
        };
        table[block.flat[b]] = Complex::new(re, im);
        estimates.push(CoefficientEstimate {
            k: block.signed[b].clone(),
            re,
            im,
            sign_re: signs.re[b],
            sign_im: signs.im[b],
        });
    }
    let est = FourierCoefficients::new(spec.clone(), table, state.norm())?;
    let rec = gridfn::reconstruct(&est, &m)?;
    Ok(Reconstruction {
        function: rec.function,
        method: Method::Fsr,
        shots: cfg.shots_consumed(2),
        queries: 0,
        truncation: m,
        diagnostics: Diagnostics {
            coefficients: estimates,
            sign_ties: signs.ties,
            uncertain_signs: signs.uncertain,
            kept,
            max_imag: rec.max_imag,
            folded_magnitude: rec.folded_magnitude,
            ..Diagnostics::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Even-extension FSR
// ---------------------------------------------------------------------------

/// Grid of the even extension: `2 N_l` points over `2 L_l`.
pub fn extended_spec<T: Real>(spec: &GridSpec<T>) -> Result<GridSpec<T>> {
    let q: Vec<usize> = spec.qubits().iter().map(|n| n + 1).collect();
    let l: Vec<T> = spec.lengths().iter().map(|&x| x + x).collect();
    GridSpec::new(&q, &l)
}

/// Even extension `g(j) = psi_{e(j)} / sqrt(2^d)` with
/// `e(j) = j` for `j < N` and `(2N - j) mod N` otherwise.
pub fn even_extension_values<T: Real>(state: &NormalizedState<T>) -> Result<Vec<T>> {
    let spec = state.spec();
    let ext = extended_spec(spec)?;
    let sizes = spec.sizes();
    let scale = T::one() / from_usize::<T>(1usize << spec.dim()).sqrt();
    Ok((0..ext.len())
        .map(|flat| {
            let j = ext.multi_index_unchecked(flat);
            let src: Vec<usize> = j
                .iter()
                .zip(&sizes)
                .map(|(&jl, &n)| if jl < n { jl } else { (2 * n - jl) % n })
                .collect();
            state.amplitudes()[spec.index(&src).expect("in range")] * scale
        })
        .collect())
}

/// Real DFT coefficients of the even extension and the largest discarded
/// imaginary part.
pub fn extended_coefficients<T: Real>(state: &NormalizedState<T>) -> Result<(GridSpec<T>, Vec<T>, T)> {
    let ext = extended_spec(state.spec())?;
    let mut data: Vec<Complex<T>> = even_extension_values(state)?
        .into_iter()
        .map(|v| Complex::new(v, T::zero()))
        .collect();
    fftn(&mut data, &ext.sizes(), false);
    let max_imag = data.iter().fold(T::zero(), |m, z| m.max(z.im.abs()));
    Ok((ext, data.into_iter().map(|z| z.re).collect(), max_imag))
}

fn extension_layout(dims: &[usize], ancillas: usize) -> Result<(RegisterLayout, Vec<usize>)> {
    let ext: Vec<usize> = dims.iter().map(|n| n + 1).collect();
    let layout = RegisterLayout::new(&ext, ancillas)?;
    let data = (0..dims.len())
        .flat_map(|l| layout.register(l).sub(0, dims[l]).qubits())
        .collect();
    Ok((layout, data))
}

/// State preparation followed by the even extension and an inverse QFT on
/// every extended register. The extension ancilla of dimension `l` is the
/// top bit of extended register `l`.
pub fn extension_magnitude_circuit<T: Real>(
    dims: &[usize],
    psi: Arc<Vec<Complex<T>>>,
) -> Result<(RegisterLayout, Circuit<T>)> {
    let (layout, data) = extension_layout(dims, 0)?;
    let mut c = Circuit::new();
    append_extension_body(&mut c, &layout, dims, &data, psi, &[]);
    Ok((layout, c))
}

fn append_extension_body<T: Real>(
    c: &mut Circuit<T>,
    layout: &RegisterLayout,
    dims: &[usize],
    data: &[usize],
    psi: Arc<Vec<Complex<T>>>,
    controls: &[Control],
) {
    c.push(Op::StatePrep {
        qubits: data.to_vec(),
        psi,
        inverse: false,
        controls: controls.to_vec(),
    });
    for (l, &n) in dims.iter().enumerate() {
        let reg = layout.register(l);
        c.push(Op::EvenExtension {
            slice: reg.sub(0, n),
            ancilla: reg.bit(n),
            inverse: false,
            controls: controls.to_vec(),
        });
    }
    for l in 0..dims.len() {
        c.push(Op::Qft {
            slice: layout.register(l),
            inverse: true,
            controls: controls.to_vec(),
        });
    }
}

/// Sign circuit for the real extended coefficients.
pub fn extension_sign_circuit<T: Real>(
    dims: &[usize],
    psi: Arc<Vec<Complex<T>>>,
    m: &[usize],
) -> Result<(RegisterLayout, Circuit<T>)> {
    let (layout, data) = extension_layout(dims, 1)?;
    let r = layout.ancilla(0);
    let mut c = Circuit::new();
    c.gate(Gate::H, r, &[]);
    append_extension_body(&mut c, &layout, dims, &data, psi, &[Control::on(r)]);
    for (l, &ml) in m.iter().enumerate() {
        let reg = layout.register(l);
        for b in 0..ml.trailing_zeros() as usize {
            c.gate(Gate::H, reg.bit(b), &[Control::off(r)]);
        }
    }
    c.gate(Gate::H, r, &[]);
    Ok((layout, c))
}

fn extension_block<T: Real>(ext: &GridSpec<T>, m: &[usize]) -> Vec<(Vec<usize>, usize)> {
    let lists: Vec<Vec<usize>> = m.iter().map(|&ml| (0..ml).collect()).collect();
    product(&lists)
        .into_iter()
        .map(|k| {
            let f = ext.index(&k).expect("block index in range");
            (k, f)
        })
        .collect()
}

/// FSR on the even extension, whose coefficients are real.
pub fn extension_fsr_readout<T: Real>(state: &NormalizedState<T>, cfg: &ReadoutConfig<T>) -> Result<Reconstruction<T>> {
    let spec = state.spec();
    let (m, cutoff) = resolve_block(spec, cfg, 2)?;
    let (ext, chat, max_imag) = extended_coefficients(state)?;
    check_power_of_two_truncation(&ext, &m, 1)?;
    let block = extension_block(&ext, &m);
    let s = 1.0 / (block.len() as f64).sqrt();

    let (mag_law, sign_law): (Vec<f64>, [Vec<f64>; 2]) = match cfg.engine {
        Engine::Analytic => {
            let mag = block.iter().map(|&(_, f)| chat[f].as_f64().powi(2)).collect();
            let plus = block.iter().map(|&(_, f)| 0.25 * (chat[f].as_f64() + s).powi(2)).collect();
            let minus = block.iter().map(|&(_, f)| 0.25 * (chat[f].as_f64() - s).powi(2)).collect();
            (mag, [plus, minus])
        }
        Engine::Circuit(backend) => {
            let psi = Arc::new(state.complex_amplitudes());
            let (layout, c) = extension_magnitude_circuit(spec.qubits(), psi.clone())?;
            let mut sv = StateVector::for_layout(&layout)?;
            c.apply(&mut sv, backend)?;
            let p = squared_amplitudes(&sv);
            let mag = block.iter().map(|&(_, f)| p[f]).collect();
            let (layout, c) = extension_sign_circuit(spec.qubits(), psi, &m)?;
            let mut sv = StateVector::for_layout(&layout)?;
            c.apply(&mut sv, backend)?;
            let p = squared_amplitudes(&sv);
            let n = ext.len();
            let plus = block.iter().map(|&(_, f)| p[f]).collect();
            let minus = block.iter().map(|&(_, f)| p[f + n]).collect();
            (mag, [plus, minus])
        }
    };
    let mag = frequencies(&mag_law, cfg.shots, &mut rng_for(cfg.seed, &[STREAM_MAGNITUDE]));
    let sg = sample_tables(&[&sign_law[0], &sign_law[1]], cfg.shots, &mut rng_for(cfg.seed, &[STREAM_SIGN]));

    let tau = cfg.tau.as_f64();
    let shots = cfg.shots.unwrap_or(0) as f64;
    let beta = cfg.beta.as_f64();
    let (mut ties, mut uncertain, mut kept) = (0, 0, 0);
    let mut est = vec![T::zero(); block.len()];
    let mut estimates = Vec::with_capacity(block.len());
    for (b, (k, _)) in block.iter().enumerate() {
        let sign = decide_sign(sg[0][b], sg[1][b], cfg.shots, beta, &mut ties, &mut uncertain);
        let keep = !cutoff || mag[b] * shots > tau;
        if keep {
            kept += 1;
            est[b] = T::lit(mag[b].sqrt() * f64::from(sign));
        }
        estimates.push(CoefficientEstimate {
            k: k.iter().map(|&v| v as i64).collect(),
            re: est[b],
            im: T::zero(),
            sign_re: sign,
            sign_im: 1,
        });
    }

    let function = extension_series(state, &ext, &m, &est)?;
    Ok(Reconstruction {
        function,
        method: Method::ExtFsr,
        shots: cfg.shots_consumed(2),
        queries: 0,
        truncation: m,
        diagnostics: Diagnostics {
            coefficients: estimates,
            sign_ties: ties,
            uncertain_signs: uncertain,
            kept,
            max_imag,
            ..Diagnostics::default()
        },
    })
}

/// Cosine series from real extended coefficients on `[0, M)^d` (dimension 1
/// fastest), mirrored into `(-M, M)^d` and restricted to the original grid.
pub(crate) fn extension_series<T: Real>(
    state: &NormalizedState<T>,
    ext: &GridSpec<T>,
    m: &[usize],
    est: &[T],
) -> Result<GridFunction<T>> {
    let spec = state.spec();
    let ext_sizes = ext.sizes();
    let mut full = vec![Complex::new(T::zero(), T::zero()); ext.len()];
    gridfn::for_each_signed(m, |k| {
        let src: Vec<usize> = k.iter().map(|v| v.unsigned_abs() as usize).collect();
        let dst: Vec<usize> = k
            .iter()
            .zip(&ext_sizes)
            .map(|(&v, &n)| v.rem_euclid(n as i64) as usize)
            .collect();
        let b = src
            .iter()
            .zip(m)
            .rev()
            .fold(0, |acc, (&s, &ml)| acc * ml + s);
        full[ext.index(&dst).expect("in range")] = Complex::new(est[b], T::zero());
    });
    fftn(&mut full, &ext_sizes, true);
    let scale = state.norm() * from_usize::<T>(1usize << spec.dim()).sqrt();
    let values = (0..spec.len())
        .map(|flat| {
            let j = spec.multi_index_unchecked(flat);
            full[ext.index(&j).expect("in range")].re * scale
        })
        .collect();
    GridFunction::new(spec.clone(), values)
}

/// Dispatches the sampling-based readouts.
pub fn readout<T: Real>(method: Method, state: &NormalizedState<T>, cfg: &ReadoutConfig<T>) -> Result<Reconstruction<T>> {
    match method {
        Method::Rsr => rsr_readout(state, cfg),
        Method::Arsr => arsr_readout(state, cfg),
        Method::Fsr => fsr_readout(state, cfg),
        Method::ExtFsr => extension_fsr_readout(state, cfg),
        other => Err(invalid(format!("{other} is not a sampling readout"))),
    }
}
