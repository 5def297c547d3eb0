//! Scaling experiments, log-log slope fits and the closed-form shot
//! estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gridfn::{encode, l2ns_error, GridFunction, GridSpec};
use crate::readout_qae::{fsqae2_readout, fsqae_readout, QaeConfig};
use crate::readout_sampling::{
    arsr_level_sweep, coarse_to_grid, post_process, readout, rsr_readout, Average, Method, ReadoutConfig,
};
use crate::sampling::derive_seed;
use crate::spline::SplineOrder;

/// Benchmark functions.
#[derive(Clone, Debug)]
pub enum TestFunction {
    /// Sum of two Gaussians on `[0,1]^2`.
    Gaussian2d,
    /// `sin(2 pi x) sin(2 pi y) + 1` on `[0,1]^2`.
    Sine2d,
    /// Non-periodic `0.2 + x` on `[0,1]`.
    Ramp1d,
    /// Fixed grid loaded from a file.
    Grid(GridFunction<f64>),
}

impl TestFunction {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian2d" => Ok(Self::Gaussian2d),
            "sine2d" => Ok(Self::Sine2d),
            "ramp1d" => Ok(Self::Ramp1d),
            other => Err(invalid(format!("unknown test function {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian2d => "gaussian2d",
            Self::Sine2d => "sine2d",
            Self::Ramp1d => "ramp1d",
            Self::Grid(_) => "grid",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ramp1d => 1,
            Self::Grid(g) => g.spec().dim(),
            _ => 2,
        }
    }

    /// Closed-form value at `x`; `None` for grid data.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        use std::f64::consts::TAU;
        match self {
            Self::Gaussian2d => {
                let g = |c: f64, a: f64| (-a * ((x[0] - c).powi(2) + (x[1] - c).powi(2))).exp();
                Some(g(0.65, 25.0) + g(0.35, 16.0))
            }
            Self::Sine2d => Some((TAU * x[0]).sin() * (TAU * x[1]).sin() + 1.0),
            Self::Ramp1d => Some(0.2 + x[0]),
            Self::Grid(_) => None,
        }
    }

    /// Samples the function on `2^qubits` points per dimension.
    pub fn grid(&self, qubits: usize) -> Result<GridFunction<f64>> {
        match self {
            Self::Grid(g) => {
                if g.spec().qubits().iter().any(|&q| q != qubits) {
                    return Err(invalid(format!("grid data has qubits {:?}, not {qubits}", g.spec().qubits())));
                }
                Ok(g.clone())
            }
            f => GridFunction::from_fn(GridSpec::unit(&vec![qubits; f.dim()])?, |x| f.eval(x).unwrap()),
        }
    }

    /// Qubits per dimension of stored grid data.
    pub fn native_qubits(&self) -> Option<usize> {
        match self {
            Self::Grid(g) => g.spec().qubits().first().copied(),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaKind {
    Shots,
    Queries,
    M0,
    N,
}

impl AbscissaKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Shots => "shots",
            Self::Queries => "queries",
            Self::M0 => "m0",
            Self::N => "n",
        }
    }
}

/// Sweep definition for [`run_scaling_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub enum Abscissa {
    /// Shot budgets per circuit.
    Shots(Vec<u64>),
    /// RQAE target errors; the block size is picked from `m_candidates`
    /// to minimize the median error against the true function.
    Queries { epsilons: Vec<f64>, m_candidates: Vec<usize> },
    /// Shot-free sweep over `M_0`.
    M0(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub seed: u64,
    pub error: f64,
    /// Shots or queries consumed.
    pub cost: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub abscissa: f64,
    pub samples: Vec<Sample>,
    pub median_error: f64,
    /// Block size behind the reported error, when one was chosen.
    pub m0: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub method: String,
    pub function: String,
    pub abscissa_kind: AbscissaKind,
    pub points: Vec<ScalingPoint>,
    /// NaN for sweeps shorter than four points.
    pub slope: f64,
    pub stderr: f64,
    pub expected_slope: Option<f64>,
}

impl ScalingRun {
    fn new(method: String, function: &TestFunction, kind: AbscissaKind, points: Vec<ScalingPoint>) -> Result<Self> {
        let x: Vec<f64> = points.iter().map(|p| p.abscissa).collect();
        let y: Vec<f64> = points.iter().map(|p| p.median_error).collect();
        let (slope, stderr) = if points.len() < 4 {
            (f64::NAN, f64::NAN)
        } else {
            fit_loglog_slope(&x, &y)?
        };
        Ok(Self {
            method,
            function: function.name().into(),
            abscissa_kind: kind,
            points,
            slope,
            stderr,
            expected_slope: None,
        })
    }
}

/// Median; the mean of the two middle values for even counts.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Least-squares slope of `log10 y` against `log10 x` and its standard error.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch("abscissa and error counts differ".into()));
    }
    if x.len() < 4 {
        return Err(invalid(format!("slope fit needs at least 4 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("slope fit needs positive finite values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * n {
        return Err(invalid("degenerate abscissa"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    Ok((slope, (sse / (n - 2.0) / sxx).sqrt()))
}

fn run_seed(seed: u64, point: usize, repeat: usize) -> u64 {
    derive_seed(seed, &[point as u64, repeat as u64])
}

/// Runs one method over an abscissa list on the test function at
/// `2^qubits` points per dimension; reports medians over `repeats`.
pub fn run_scaling_experiment(
    method: Method,
    function: &TestFunction,
    qubits: usize,
    abscissa: &Abscissa,
    repeats: usize,
    seed: u64,
) -> Result<ScalingRun> {
    if repeats == 0 {
        return Err(invalid("repeats must be positive"));
    }
    let truth = function.grid(qubits)?;
    let state = encode(&truth)?;
    let err = |f: &GridFunction<f64>| l2ns_error(truth.values(), f.values());
    match abscissa {
        Abscissa::Shots(shots) => {
            let points = shots
                .iter()
                .enumerate()
                .map(|(pi, &s)| -> Result<ScalingPoint> {
                    match method {
                        Method::Rsr | Method::Fsr | Method::ExtFsr => {
                            let samples = (0..repeats)
                                .into_par_iter()
                                .map(|r| {
                                    let sd = run_seed(seed, pi, r);
                                    let rec = readout(method, &state, &ReadoutConfig::new(s, sd))?;
                                    Ok(Sample {
                                        seed: sd,
                                        error: err(&rec.function)?,
                                        cost: s,
                                    })
                                })
                                .collect::<Result<Vec<_>>>()?;
                            let median_error = median(&samples.iter().map(|x| x.error).collect::<Vec<_>>());
                            Ok(ScalingPoint {
                                abscissa: s as f64,
                                samples,
                                median_error,
                                m0: None,
                            })
                        }
                        Method::Arsr => {
                            // Every level from one histogram per repeat; the level
                            // with the smallest median error is reported.
                            let sweeps = (0..repeats)
                                .into_par_iter()
                                .map(|r| {
                                    let sd = run_seed(seed, pi, r);
                                    let levels = arsr_level_sweep(&state, &ReadoutConfig::new(s, sd))?;
                                    let errs = levels
                                        .iter()
                                        .map(|(m, f)| Ok((m[0], err(f)?)))
                                        .collect::<Result<Vec<_>>>()?;
                                    Ok((sd, errs))
                                })
                                .collect::<Result<Vec<_>>>()?;
                            best_level(&sweeps, s as f64, |_| s)
                        }
                        other => Err(invalid(format!("{other} cannot be swept over shots"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            ScalingRun::new(method.name().into(), function, AbscissaKind::Shots, points)
        }
        Abscissa::Queries { epsilons, m_candidates } => {
            if !matches!(method, Method::Fsqae | Method::Fsqae2) {
                return Err(invalid(format!("{method} cannot be swept over queries")));
            }
            if m_candidates.is_empty() {
                return Err(invalid("no block-size candidates"));
            }
            let points = epsilons
                .iter()
                .enumerate()
                .map(|(pi, &eps)| {
                    let mut best: Option<ScalingPoint> = None;
                    for &m in m_candidates {
                        let samples = (0..repeats)
                            .into_par_iter()
                            .map(|r| {
                                let sd = run_seed(seed, pi, r);
                                let cfg = QaeConfig::new(eps, sd);
                                let mm = vec![m; function.dim()];
                                let rec = if method == Method::Fsqae {
                                    fsqae_readout(&state, &mm, &cfg)?
                                } else {
                                    fsqae2_readout(&state, &mm, &cfg)?
                                };
                                Ok(Sample {
                                    seed: sd,
                                    error: err(&rec.function)?,
                                    cost: rec.queries,
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        let e = median(&samples.iter().map(|x| x.error).collect::<Vec<_>>());
                        let q = median(&samples.iter().map(|x| x.cost as f64).collect::<Vec<_>>());
                        if best.as_ref().is_none_or(|b| e < b.median_error) {
                            best = Some(ScalingPoint {
                                abscissa: q,
                                samples,
                                median_error: e,
                                m0: Some(m),
                            });
                        }
                    }
                    Ok(best.expect("at least one candidate"))
                })
                .collect::<Result<Vec<_>>>()?;
            ScalingRun::new(method.name().into(), function, AbscissaKind::Queries, points)
        }
        Abscissa::M0(ms) => {
            if !matches!(method, Method::Arsr | Method::Fsr | Method::ExtFsr) {
                return Err(invalid(format!("{method} has no shot-free M0 sweep")));
            }
            let points = ms
                .par_iter()
                .map(|&m| {
                    let cfg = ReadoutConfig::exact().fixed(&vec![m; function.dim()]);
                    let rec = readout(method, &state, &cfg)?;
                    let e = err(&rec.function)?;
                    Ok(ScalingPoint {
                        abscissa: m as f64,
                        samples: vec![Sample {
                            seed: 0,
                            error: e,
                            cost: 0,
                        }],
                        median_error: e,
                        m0: Some(m),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ScalingRun::new(method.name().into(), function, AbscissaKind::M0, points)
        }
    }
}

/// Picks the block size with the smallest median error over repeats.
fn best_level(sweeps: &[(u64, Vec<(usize, f64)>)], abscissa: f64, cost: impl Fn(usize) -> u64) -> Result<ScalingPoint> {
    let levels = sweeps.first().map_or(0, |s| s.1.len());
    let mut best: Option<ScalingPoint> = None;
    for li in 0..levels {
        let samples: Vec<Sample> = sweeps
            .iter()
            .map(|(sd, errs)| Sample {
                seed: *sd,
                error: errs[li].1,
                cost: cost(errs[li].0),
            })
            .collect();
        let e = median(&samples.iter().map(|x| x.error).collect::<Vec<_>>());
        if best.as_ref().is_none_or(|b| e < b.median_error) {
            best = Some(ScalingPoint {
                abscissa,
                samples,
                median_error: e,
                m0: Some(sweeps[0].1[li].0),
            });
        }
    }
    best.ok_or_else(|| invalid("no levels to choose from"))
}

/// RSR followed by block averaging, error against the grid size `N` for
/// `N_0 = 2^q`, `q` in `qubits`. For every average the block size
/// `M_0 in {2, ..., N_0}` with the smallest median error is reported.
pub fn post_processing_study(
    function: &TestFunction,
    qubits: &[usize],
    shots: u64,
    averages: &[Average],
    spline: SplineOrder,
    repeats: usize,
    seed: u64,
) -> Result<Vec<ScalingRun>> {
    if repeats == 0 {
        return Err(invalid("repeats must be positive"));
    }
    // For every grid: per repeat, per average, (seed, [(M0, error)]).
    let per_n = qubits
        .iter()
        .enumerate()
        .map(|(pi, &q)| {
            let truth = function.grid(q)?;
            let state = encode(&truth)?;
            let runs = (0..repeats)
                .into_par_iter()
                .map(|r| {
                    let sd = run_seed(seed, pi, r);
                    let fine = rsr_readout(&state, &ReadoutConfig::new(shots, sd))?.function;
                    averages
                        .iter()
                        .map(|avg| {
                            let errs = (1..=q)
                                .map(|k| {
                                    let m = vec![1usize << k; function.dim()];
                                    let coarse = post_process(&fine, *avg, &m)?;
                                    let f = coarse_to_grid(truth.spec(), &m, &coarse, spline)?;
                                    Ok((1usize << k, l2ns_error(truth.values(), f.values())?))
                                })
                                .collect::<Result<Vec<_>>>()?;
                            Ok((sd, errs))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((truth.spec().len(), runs))
        })
        .collect::<Result<Vec<_>>>()?;
    averages
        .iter()
        .enumerate()
        .map(|(ai, avg)| {
            let points = per_n
                .iter()
                .map(|(n, runs)| {
                    let sweeps: Vec<(u64, Vec<(usize, f64)>)> = runs.iter().map(|r| r[ai].clone()).collect();
                    best_level(&sweeps, *n as f64, |_| shots)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut run = ScalingRun::new(format!("rsr+{}", avg.name()), function, AbscissaKind::N, points)?;
            run.expected_slope = reference_slope(function.name(), &run.method, run.abscissa_kind);
            Ok(run)
        })
        .collect()
}

/// Slopes reported in the reference figures for the two 2D examples.
pub fn reference_slope(function: &str, method: &str, kind: AbscissaKind) -> Option<f64> {
    use AbscissaKind::*;
    let third = -1.0 / 3.0;
    match (function, method, kind) {
        ("gaussian2d", "rsr", Shots) | ("sine2d", "rsr", Shots) => Some(-0.5),
        ("gaussian2d", "arsr", Shots) | ("sine2d", "arsr", Shots) => Some(third),
        ("gaussian2d", "fsr", Shots) => Some(-0.25),
        ("sine2d", "fsr", Shots) => Some(-0.5),
        ("gaussian2d", "fsqae", Queries) | ("sine2d", "fsqae", Queries) => Some(third),
        ("sine2d", "fsqae2", Queries) => Some(-1.0),
        ("gaussian2d", "arsr", M0) | ("sine2d", "arsr", M0) => Some(-2.0),
        ("gaussian2d", "fsr", M0) => Some(-0.5),
        (_, "rsr+rms", N) => Some(0.0),
        (_, "rsr+mean" | "rsr+shifted_harmonic" | "rsr+fmf", N) => Some(0.5),
        _ => None,
    }
}

/// Parameters of the example suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleOptions {
    pub qubits: usize,
    pub qae_qubits: usize,
    pub shots: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub fsqae2_epsilons: Vec<f64>,
    pub fsqae_m: Vec<usize>,
    pub fsqae2_m: Vec<usize>,
    pub m_sweep: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for ExampleOptions {
    /// Shot and error lists of the reference experiments.
    fn default() -> Self {
        let eps = vec![0.05, 0.02, 0.01, 0.005, 0.0025, 0.001, 0.0005];
        Self {
            qubits: 9,
            qae_qubits: 6,
            shots: (0..7).map(|i| 10_000 * 4u64.pow(i)).collect(),
            epsilons: eps.clone(),
            fsqae2_epsilons: eps[..6].to_vec(),
            fsqae_m: vec![2, 4, 8, 16, 32],
            fsqae2_m: vec![2, 4, 8],
            m_sweep: (1..=7).map(|k| 1usize << k).collect(),
            repeats: 5,
            seed: 2024,
            methods: vec![Method::Rsr, Method::Arsr, Method::Fsr, Method::Fsqae],
        }
    }
}

impl ExampleOptions {
    /// Settings of the sine example: FSQAE2 included, errors down to 0.001.
    pub fn example2() -> Self {
        let eps = vec![0.05, 0.02, 0.01, 0.005, 0.0025, 0.001];
        Self {
            epsilons: eps.clone(),
            fsqae2_epsilons: eps,
            methods: vec![Method::Rsr, Method::Arsr, Method::Fsr, Method::Fsqae, Method::Fsqae2],
            ..Self::default()
        }
    }

    /// Shorter lists that finish in minutes on one core.
    pub fn desk() -> Self {
        Self {
            shots: (0..5).map(|i| 10_000 * 4u64.pow(i)).collect(),
            epsilons: vec![0.05, 0.02, 0.01, 0.005],
            fsqae2_epsilons: vec![0.05, 0.02, 0.01, 0.005, 0.0025, 0.001],
            ..Self::default()
        }
    }
}

/// Shot sweeps, QAE sweeps and shot-free `M_0` sweeps for one function.
pub fn run_example(function: &TestFunction, opts: &ExampleOptions) -> Result<Vec<ScalingRun>> {
    let mut runs = Vec::new();
    for &method in &opts.methods {
        let mut run = match method {
            Method::Rsr | Method::Arsr | Method::Fsr | Method::ExtFsr => run_scaling_experiment(
                method,
                function,
                opts.qubits,
                &Abscissa::Shots(opts.shots.clone()),
                opts.repeats,
                opts.seed,
            )?,
            Method::Fsqae => run_scaling_experiment(
                method,
                function,
                opts.qae_qubits,
                &Abscissa::Queries {
                    epsilons: opts.epsilons.clone(),
                    m_candidates: opts.fsqae_m.clone(),
                },
                opts.repeats,
                opts.seed,
            )?,
            Method::Fsqae2 => run_scaling_experiment(
                method,
                function,
                opts.qae_qubits,
                &Abscissa::Queries {
                    epsilons: opts.fsqae2_epsilons.clone(),
                    m_candidates: opts.fsqae2_m.clone(),
                },
                opts.repeats,
                opts.seed,
            )?,
            Method::Rsqae => return Err(invalid("rsqae has no example sweep")),
        };
        run.expected_slope = reference_slope(function.name(), &run.method, run.abscissa_kind);
        runs.push(run);
    }
    for method in [Method::Arsr, Method::Fsr] {
        if opts.methods.contains(&method) {
            let mut run =
                run_scaling_experiment(method, function, opts.qubits, &Abscissa::M0(opts.m_sweep.clone()), 1, opts.seed)?;
            run.expected_slope = reference_slope(function.name(), &run.method, run.abscissa_kind);
            runs.push(run);
        }
    }
    Ok(runs)
}

// ---------------------------------------------------------------------------
// Shot estimator
// ---------------------------------------------------------------------------

/// Regularity class of the function to be read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    /// Piecewise `W^{1,1}`, `p = 1`.
    W11,
    /// Continuous piecewise `W^{2,1}`, `p = 2`.
    W21,
}

impl Regularity {
    pub fn p(self) -> u32 {
        match self {
            Self::W11 => 1,
            Self::W21 => 2,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "W11" => Ok(Self::W11),
            "W21" => Ok(Self::W21),
            other => Err(invalid(format!("unknown regularity class {other:?}"))),
        }
    }
}

/// Shots needed for error `eps` in `d` dimensions with `N = eps^-d`.
pub fn estimate_required_shots(method: Method, d: usize, eps: f64, class: Regularity) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("error bound {eps} outside (0, 1)")));
    }
    if !(1..=3).contains(&d) {
        return Err(invalid(format!("dimension {d} outside 1..=3")));
    }
    let inv = 1.0 / eps;
    let d = d as f64;
    let p = f64::from(class.p());
    match method {
        Method::Rsr => Ok(inv.powf(2.0 + d)),
        Method::Arsr => Ok(match class {
            Regularity::W11 => inv.powf(2.0 + d),
            Regularity::W21 => inv.powf(2.0 + d / 2.0),
        }),
        Method::Fsr => {
            let s = 2.0 / (2.0 * p - 1.0);
            let c = if class == Regularity::W11 { 1.0 } else { 0.5 };
            Ok(inv.powf(2.0 + s) * inv.ln().powf(c * (d - 1.0)))
        }
        other => Err(invalid(format!("no shot estimate for {other}"))),
    }
}

/// RSR shots divided by the method's shots.
pub fn acceleration(method: Method, d: usize, eps: f64, class: Regularity) -> Result<f64> {
    Ok(estimate_required_shots(Method::Rsr, d, eps, class)? / estimate_required_shots(method, d, eps, class)?)
}

/// One cell of a shot comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotCell {
    pub class: Regularity,
    pub d: usize,
    pub eps: f64,
    pub method: Method,
    /// Estimate rounded to two significant figures.
    pub shots: f64,
    /// Rounded RSR estimate over the rounded estimate of `method`.
    pub acceleration: f64,
}

/// RSR, ARSR and FSR estimates for every `(d, eps)` pair.
pub fn shot_table(class: Regularity, dims: &[usize], eps: &[f64]) -> Result<Vec<ShotCell>> {
    let mut cells = Vec::new();
    for &d in dims {
        for &e in eps {
            let rsr = round_sig(estimate_required_shots(Method::Rsr, d, e, class)?, 2);
            for method in [Method::Rsr, Method::Arsr, Method::Fsr] {
                let shots = round_sig(estimate_required_shots(method, d, e, class)?, 2);
                cells.push(ShotCell {
                    class,
                    d,
                    eps: e,
                    method,
                    shots,
                    acceleration: rsr / shots,
                });
            }
        }
    }
    Ok(cells)
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let k = digits as i32 - 1 - e;
    if k >= 0 {
        let scale = 10f64.powi(k);
        (x * scale).round() / scale
    } else {
        let scale = 10f64.powi(-k);
        (x / scale).round() * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_law_slope() {
        let x: Vec<f64> = (0..6).map(|i| 10f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powf(-0.5)).collect();
        let (s, e) = fit_loglog_slope(&x, &y).unwrap();
        assert_abs_diff_eq!(s, -0.5, epsilon = 1e-12);
        assert!(e < 1e-12);
        let (s, _) = fit_loglog_slope(&x, &[2.0; 6]).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn slope_fit_preconditions() {
        assert!(fit_loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_loglog_slope(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(fit_loglog_slope(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn significant_figures() {
        assert_eq!(round_sig(4.6051e8, 2), 4.6e8);
        assert_eq!(round_sig(0.000123456, 3), 0.000123);
        assert_eq!(round_sig(31622.7, 2), 32000.0);
    }

    #[test]
    fn estimator_spot_values() {
        let r = |m, d, e, c| round_sig(estimate_required_shots(m, d, e, c).unwrap(), 2);
        assert_eq!(r(Method::Rsr, 2, 0.01, Regularity::W11), 1e8);
        assert_eq!(r(Method::Fsr, 2, 0.01, Regularity::W11), 4.6e8);
        assert_eq!(r(Method::Arsr, 3, 0.001, Regularity::W21), 3.2e10);
        assert_eq!(r(Method::Fsr, 3, 0.001, Regularity::W21), 6.9e8);
        assert_eq!(r(Method::Fsr, 1, 0.01, Regularity::W21), 2.2e5);
        assert!(estimate_required_shots(Method::Fsqae, 1, 0.01, Regularity::W11).is_err());
        assert!(estimate_required_shots(Method::Rsr, 4, 0.01, Regularity::W11).is_err());
    }

    #[test]
    fn test_function_values() {
        let g = TestFunction::Gaussian2d.eval(&[0.65, 0.65]).unwrap();
        assert_abs_diff_eq!(g, 1.0 + (-16.0f64 * 0.18).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(TestFunction::Sine2d.eval(&[0.25, 0.25]).unwrap(), 2.0, epsilon = 1e-15);
        let grid = TestFunction::Sine2d.grid(3).unwrap();
        assert_eq!(grid.values().len(), 64);
        assert!(TestFunction::parse("nope").is_err());
    }

    #[test]
    fn abscissa_mismatch_is_rejected() {
        let e = run_scaling_experiment(Method::Fsqae, &TestFunction::Sine2d, 3, &Abscissa::Shots(vec![1; 4]), 1, 0);
        assert!(e.is_err());
        let e = run_scaling_experiment(Method::Rsr, &TestFunction::Sine2d, 3, &Abscissa::M0(vec![1, 2]), 1, 0);
        assert!(e.is_err());
    }

    #[test]
    fn scaling_runs_are_reproducible() {
        let a = Abscissa::Shots(vec![1000, 4000, 16000, 64000]);
        let r1 = run_scaling_experiment(Method::Fsr, &TestFunction::Sine2d, 4, &a, 3, 7).unwrap();
        let r2 = run_scaling_experiment(Method::Fsr, &TestFunction::Sine2d, 4, &a, 3, 7).unwrap();
        assert_eq!(r1, r2);
    }
}
