//! Time-series readout for the 2D viscous Burgers equation: linearized
//! spectral stepping, emulated imaginary-time steps with success
//! probabilities, per-step readout and state re-injection.
//!
//! The driver works in `f64`; the dense reference relies on
//! `nalgebra::DMatrix::exp`.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cfd::{readout_grid, VelocityField};
use crate::error::{invalid, Error, Result};
use crate::gridfn::{fftn, l2ns_error, norm2, GridFunction, GridSpec};
use crate::readout_sampling::{Method, ReadoutConfig, Truncation};
use crate::sampling::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BurgersConfig {
    /// Qubits per axis.
    pub qubits: usize,
    pub dt: f64,
    pub steps: usize,
    pub nu: f64,
    pub method: Method,
    /// Shots per circuit after post-selection; `None` reads exact
    /// probabilities.
    pub shots: Option<u64>,
    /// Sub-normalization folded into each success probability.
    pub kappa: f64,
    pub seed: u64,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self {
            qubits: 5,
            dt: 0.04,
            steps: 25,
            nu: 0.05,
            method: Method::Fsr,
            shots: Some(100_000),
            kappa: 0.51,
            seed: 2024,
        }
    }
}

impl BurgersConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=10).contains(&self.qubits) {
            return Err(invalid(format!("qubits per axis must be in 2..=10, got {}", self.qubits)));
        }
        if !(self.dt.is_finite() && self.dt >= 0.0) {
            return Err(invalid(format!("dt must be finite and nonnegative, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(invalid("steps must be positive"));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(invalid(format!("viscosity must be nonnegative, got {}", self.nu)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(invalid(format!("kappa must be in (0, 1], got {}", self.kappa)));
        }
        if !matches!(self.method, Method::Fsr | Method::ExtFsr | Method::Rsr | Method::Arsr) {
            return Err(invalid(format!("{} is not supported for time stepping", self.method)));
        }
        if self.shots == Some(0) {
            return Err(invalid("shots must be positive"));
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn spec(&self) -> Result<GridSpec<f64>> {
        GridSpec::new(&[self.qubits, self.qubits], &[TAU, TAU])
    }
}

/// `u_x = u_y = sin(x + y) / (2 pi)`, unit continuous L2 norm.
pub fn initial_condition(cfg: &BurgersConfig) -> Result<VelocityField<f64>> {
    let c = 1.0 / TAU;
    VelocityField::from_fn(cfg.spec()?, |x| c * (x[0] + x[1]).sin(), |x| c * (x[0] + x[1]).sin())
}

/// `int int (u_x^2 + u_y^2) dx dy` by the periodic trapezoid rule.
pub fn continuous_norm2(field: &VelocityField<f64>) -> f64 {
    let spec = field.spec();
    let cell: f64 = spec.lengths().iter().zip(spec.sizes()).map(|(l, n)| l / n as f64).product();
    let s: f64 = field.ux().values().iter().chain(field.uy().values()).map(|v| v * v).sum();
    s * cell
}

fn wavenumbers(n: usize, length: f64, zero_nyquist: bool) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if zero_nyquist && j == n / 2 {
                return 0.0;
            }
            let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            k * TAU / length
        })
        .collect()
}

/// Spectral first derivative along `axis`; the Nyquist mode is zeroed.
pub fn spectral_derivative(f: &GridFunction<f64>, axis: usize) -> Vec<f64> {
    let spec = f.spec();
    let sizes = spec.sizes();
    let k = wavenumbers(sizes[axis], spec.lengths()[axis], true);
    let stride: usize = sizes[..axis].iter().product();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fftn(&mut data, &sizes, false);
    for (flat, c) in data.iter_mut().enumerate() {
        *c *= Complex64::new(0.0, k[(flat / stride) % sizes[axis]]);
    }
    fftn(&mut data, &sizes, true);
    data.into_iter().map(|c| c.re).collect()
}

/// Linearized generator `H` acting on stacked `(u_x, u_y)`: spectral
/// diffusion on each component plus pointwise velocity gradients.
#[derive(Clone, Debug)]
pub struct Generator {
    sizes: Vec<usize>,
    /// `nu |k|^2` per flat Fourier index.
    diffusion: Vec<f64>,
    /// `d_x u_x`, `d_y u_x`, `d_x u_y`, `d_y u_y`.
    gradients: [Vec<f64>; 4],
}

impl Generator {
    pub fn new(field: &VelocityField<f64>, nu: f64) -> Self {
        let spec = field.spec();
        let sizes = spec.sizes();
        let kx = wavenumbers(sizes[0], spec.lengths()[0], false);
        let ky = wavenumbers(sizes[1], spec.lengths()[1], false);
        let diffusion = (0..spec.len())
            .map(|flat| {
                let (i, j) = (flat % sizes[0], flat / sizes[0]);
                nu * (kx[i] * kx[i] + ky[j] * ky[j])
            })
            .collect();
        let gradients = [
            spectral_derivative(field.ux(), 0),
            spectral_derivative(field.ux(), 1),
            spectral_derivative(field.uy(), 0),
            spectral_derivative(field.uy(), 1),
        ];
        Self {
            sizes,
            diffusion,
            gradients,
        }
    }

    fn grid_len(&self) -> usize {
        self.diffusion.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.grid_len()
    }

    fn diffuse(&self, v: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fftn(&mut data, &self.sizes, false);
        for (c, &d) in data.iter_mut().zip(&self.diffusion) {
            *c *= d;
        }
        fftn(&mut data, &self.sizes, true);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Matrix-free `H u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid_len();
        assert_eq!(u.len(), 2 * n, "generator input must stack both components");
        let (ux, uy) = u.split_at(n);
        let [pxx, pxy, pyx, pyy] = &self.gradients;
        let mut out = self.diffuse(ux);
        out.extend(self.diffuse(uy));
        for i in 0..n {
            out[i] += pxx[i] * ux[i] + pxy[i] * uy[i];
            out[n + i] += pyx[i] * ux[i] + pyy[i] * uy[i];
        }
        out
    }

    /// Assembled `2N x 2N` matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.grid_len();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.diffuse(&e);
            e[j] = 0.0;
            for (i, &v) in col.iter().enumerate() {
                h[(i, j)] = v;
                h[(n + i, n + j)] = v;
            }
        }
        let [pxx, pxy, pyx, pyy] = &self.gradients;
        for i in 0..n {
            h[(i, i)] += pxx[i];
            h[(i, n + i)] += pxy[i];
            h[(n + i, i)] += pyx[i];
            h[(n + i, n + i)] += pyy[i];
        }
        h
    }

    /// Upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        let d = self.diffusion.iter().copied().fold(0.0, f64::max);
        let [a, b, c, e] = &self.gradients;
        let p = (0..self.grid_len())
            .map(|i| (a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + e[i] * e[i]).sqrt())
            .fold(0.0, f64::max);
        d + p
    }
}

fn stack(field: &VelocityField<f64>) -> Vec<f64> {
    let mut u = field.ux().values().to_vec();
    u.extend_from_slice(field.uy().values());
    u
}

fn unstack(spec: &GridSpec<f64>, u: &[f64]) -> Result<VelocityField<f64>> {
    let (ux, uy) = u.split_at(spec.len());
    VelocityField::new(GridFunction::new(spec.clone(), ux.to_vec())?, GridFunction::new(spec.clone(), uy.to_vec())?)
}

/// `exp(-dt H) u` from the dense matrix exponential.
pub fn reference_step(gen: &Generator, u: &[f64], dt: f64) -> Vec<f64> {
    let e = (gen.dense() * -dt).exp();
    (e * DVector::from_column_slice(u)).as_slice().to_vec()
}

/// Matrix-free `exp(-t H) u` by sub-stepped truncated Taylor series.
pub fn expmv(gen: &Generator, u: &[f64], t: f64) -> Vec<f64> {
    let substeps = (t * gen.norm_bound()).ceil().max(1.0) as usize;
    let h = t / substeps as f64;
    let mut v = u.to_vec();
    for _ in 0..substeps {
        let mut term = v.clone();
        let mut sum = v.clone();
        for j in 1..=80 {
            term = gen.apply(&term);
            let c = -h / j as f64;
            for x in term.iter_mut() {
                *x *= c;
            }
            for (s, x) in sum.iter_mut().zip(&term) {
                *s += x;
            }
            if norm2(&term) <= 1e-18 * norm2(&sum) {
                break;
            }
        }
        v = sum;
    }
    v
}

/// How the reference propagator is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Dense matrix exponential of the assembled generator.
    Dense,
    /// Taylor series of the matrix-free generator.
    #[default]
    MatrixFree,
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "matrix-free" => Ok(Self::MatrixFree),
            other => Err(invalid(format!("unknown reference kind {other:?}"))),
        }
    }
}

/// Reference chain `u^(k) = exp(-dt H(u^(k-1))) u^(k-1)` for `k = 0..=steps`.
pub fn reference_solution(cfg: &BurgersConfig, kind: ReferenceKind) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let mut u = stack(&initial_condition(cfg)?);
    let mut chain = vec![u.clone()];
    for _ in 0..cfg.steps {
        let gen = Generator::new(&unstack(&spec, &u)?, cfg.nu);
        u = match kind {
            ReferenceKind::Dense => reference_step(&gen, &u, cfg.dt),
            ReferenceKind::MatrixFree => expmv(&gen, &u, cfg.dt),
        };
        chain.push(u.clone());
    }
    Ok(chain)
}

/// Continuous L2 norm squared of each state in a reference chain.
pub fn chain_norms2(cfg: &BurgersConfig, chain: &[Vec<f64>]) -> Result<Vec<f64>> {
    let spec = cfg.spec()?;
    chain.iter().map(|u| Ok(continuous_norm2(&unstack(&spec, u)?))).collect()
}

/// Emulated post-selected imaginary-time step on a normalized state;
/// returns the renormalized state and `p = kappa |exp(-dt H) psi|^2`.
pub fn pite_emulated_step(psi: &[f64], gen: &Generator, dt: f64, kappa: f64) -> Result<(Vec<f64>, f64)> {
    let nrm = norm2(psi);
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("input state has norm {nrm}")));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(invalid(format!("kappa must be in (0, 1], got {kappa}")));
    }
    let phi = expmv(gen, psi, dt);
    let r = norm2(&phi);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::ZeroProbability);
    }
    Ok((phi.iter().map(|x| x / r).collect(), kappa * r * r))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub p_k: f64,
    pub cumulative: f64,
    pub l2ns_error: f64,
    pub shots: f64,
}

#[derive(Clone, Debug)]
pub struct TsrTrace {
    /// Reconstructed fields after each step.
    pub fields: Vec<VelocityField<f64>>,
    pub records: Vec<StepRecord>,
}

impl TsrTrace {
    pub fn final_error(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.l2ns_error)
    }

    pub fn total_shots(&self) -> f64 {
        self.records.iter().map(|r| r.shots).sum()
    }

    /// `max p_k / min p_k`.
    pub fn uniformity(&self) -> f64 {
        let p = self.records.iter().map(|r| r.p_k);
        p.clone().fold(0.0, f64::max) / p.fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "step,p_k,cumulative,l2ns_error,shots")?;
        for r in &self.records {
            writeln!(w, "{},{:e},{:e},{:e},{}", r.step, r.p_k, r.cumulative, r.l2ns_error, r.shots.round())?;
        }
        Ok(())
    }
}

fn step_readout(cfg: &BurgersConfig, f: &GridFunction<f64>, step: usize, comp: u64) -> Result<(GridFunction<f64>, u64)> {
    let n = 1usize << cfg.qubits;
    let seed = derive_seed(cfg.seed, &[step as u64, comp]);
    let rc = match cfg.method {
        Method::Fsr => ReadoutConfig {
            shots: cfg.shots,
            truncation: Truncation::Fixed(vec![n / 2; 2]),
            ..ReadoutConfig::new(1, seed)
        },
        Method::ExtFsr => ReadoutConfig {
            shots: cfg.shots,
            truncation: Truncation::Fixed(vec![n; 2]),
            ..ReadoutConfig::new(1, seed)
        },
        // one circuit per component, so twice the shots of a Fourier readout
        _ => ReadoutConfig {
            shots: cfg.shots.map(|s| 2 * s),
            ..ReadoutConfig::new(1, seed)
        },
    };
    let r = readout_grid(f, cfg.method, &rc)?;
    Ok((r.function, r.shots))
}

/// Runs the pipeline against a precomputed reference chain.
pub fn tsr_run_with_reference(cfg: &BurgersConfig, reference: &[Vec<f64>]) -> Result<TsrTrace> {
    cfg.validate()?;
    if reference.len() != cfg.steps + 1 {
        return Err(Error::ShapeMismatch(format!(
            "reference has {} states, need {}",
            reference.len(),
            cfg.steps + 1
        )));
    }
    let spec = cfg.spec()?;
    let mut field = initial_condition(cfg)?;
    let mut fields = Vec::with_capacity(cfg.steps);
    let mut records = Vec::with_capacity(cfg.steps);
    let mut cumulative = 1.0;
    for k in 1..=cfg.steps {
        let wrap = |e: Error| Error::Step {
            step: k,
            source: Box::new(e),
        };
        let u = stack(&field);
        let a = norm2(&u);
        let gen = Generator::new(&field, cfg.nu);
        let psi: Vec<f64> = u.iter().map(|x| x / a).collect();
        let (phi, p) = pite_emulated_step(&psi, &gen, cfg.dt, cfg.kappa).map_err(wrap)?;
        cumulative *= p;
        // physical amplitude of the propagated field
        let scale = a * (p / cfg.kappa).sqrt();
        let phys: Vec<f64> = phi.iter().map(|x| x * scale).collect();
        let target = unstack(&spec, &phys).map_err(wrap)?;
        let (rx, ry) = rayon::join(
            || step_readout(cfg, target.ux(), k, 0),
            || step_readout(cfg, target.uy(), k, 1),
        );
        let ((fx, sx), (fy, sy)) = (rx.map_err(wrap)?, ry.map_err(wrap)?);
        field = VelocityField::new(fx, fy).map_err(wrap)?;
        let l2ns = l2ns_error(&reference[k], &stack(&field)).map_err(wrap)?;
        records.push(StepRecord {
            step: k,
            p_k: p,
            cumulative,
            l2ns_error: l2ns,
            shots: (sx + sy) as f64 / p,
        });
        fields.push(field.clone());
    }
    Ok(TsrTrace { fields, records })
}

pub fn tsr_run(cfg: &BurgersConfig, kind: ReferenceKind) -> Result<TsrTrace> {
    let reference = reference_solution(cfg, kind)?;
    tsr_run_with_reference(cfg, &reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small() -> BurgersConfig {
        BurgersConfig {
            qubits: 3,
            steps: 4,
            ..BurgersConfig::default()
        }
    }

    #[test]
    fn initial_condition_values_and_norm() {
        let cfg = BurgersConfig::default();
        let f = initial_condition(&cfg).unwrap();
        assert_eq!(f.ux().values()[0], 0.0);
        // x = pi/2 is grid index 8 of 32
        assert_abs_diff_eq!(f.ux().values()[8], 1.0 / TAU, epsilon = 1e-15);
        assert_abs_diff_eq!(continuous_norm2(&f), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let f = initial_condition(&BurgersConfig::default()).unwrap();
        let d = spectral_derivative(f.ux(), 0);
        let spec = f.spec().clone();
        for (i, &v) in d.iter().enumerate() {
            let x = spec.point(i);
            assert_abs_diff_eq!(v, (x[0] + x[1]).cos() / TAU, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_field_is_pure_diffusion() {
        let cfg = small();
        let spec = cfg.spec().unwrap();
        let zero = VelocityField::from_fn(spec.clone(), |_| 0.0, |_| 0.0).unwrap();
        let gen = Generator::new(&zero, cfg.nu);
        let mut u = Vec::new();
        for _ in 0..2 {
            u.extend((0..spec.len()).map(|i| {
                let x = spec.point(i);
                (x[0] + x[1]).sin()
            }));
        }
        let hu = gen.apply(&u);
        for (a, b) in hu.iter().zip(&u) {
            assert_abs_diff_eq!(*a, 2.0 * cfg.nu * b, epsilon = 1e-12);
        }
        let constant = VelocityField::from_fn(spec, |_| 0.3, |_| -1.0).unwrap();
        let g = Generator::new(&constant, cfg.nu);
        assert!(g.gradients.iter().flatten().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn matrix_free_matches_dense() {
        let cfg = BurgersConfig { qubits: 2, ..small() };
        let f = initial_condition(&cfg).unwrap();
        let f = VelocityField::new(
            f.ux().clone(),
            GridFunction::from_fn(cfg.spec().unwrap(), |x| x[0].cos() + 0.3 * (2.0 * x[1]).sin()).unwrap(),
        )
        .unwrap();
        let gen = Generator::new(&f, cfg.nu);
        let h = gen.dense();
        let u: Vec<f64> = (0..gen.dim()).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let dense = (&h * DVector::from_column_slice(&u)).as_slice().to_vec();
        for (a, b) in gen.apply(&u).iter().zip(&dense) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
        let e1 = expmv(&gen, &u, 0.3);
        let e2 = reference_step(&gen, &u, 0.3);
        for (a, b) in e1.iter().zip(&e2) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn reference_step_properties() {
        let cfg = small();
        let spec = cfg.spec().unwrap();
        let zero = VelocityField::from_fn(spec.clone(), |_| 0.0, |_| 0.0).unwrap();
        let u = stack(&initial_condition(&cfg).unwrap());
        let gen = Generator::new(&zero, cfg.nu);
        let v = reference_step(&gen, &u, cfg.dt);
        for (a, b) in v.iter().zip(&u) {
            assert_abs_diff_eq!(*a, b * (-0.004f64).exp(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!((-0.004f64).exp(), 0.996008, epsilon = 1e-6);
        let same = reference_step(&gen, &u, 0.0);
        assert_eq!(same.len(), u.len());
        for (a, b) in same.iter().zip(&u) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
        let gen = Generator::new(&initial_condition(&cfg).unwrap(), cfg.nu);
        let half = reference_step(&gen, &reference_step(&gen, &u, cfg.dt / 2.0), cfg.dt / 2.0);
        let full = reference_step(&gen, &u, cfg.dt);
        for (a, b) in half.iter().zip(&full) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn pite_probabilities() {
        let cfg = small();
        let spec = cfg.spec().unwrap();
        let zero = VelocityField::from_fn(spec, |_| 0.0, |_| 0.0).unwrap();
        let gen = Generator::new(&zero, cfg.nu);
        let u = stack(&initial_condition(&cfg).unwrap());
        let a = norm2(&u);
        let psi: Vec<f64> = u.iter().map(|x| x / a).collect();
        let (_, p1) = pite_emulated_step(&psi, &gen, cfg.dt, 1.0).unwrap();
        assert_abs_diff_eq!(p1, (-0.008f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p1, 0.992032, epsilon = 1e-6);
        let (_, p2) = pite_emulated_step(&psi, &gen, cfg.dt, 0.5).unwrap();
        assert_eq!(p2, 0.5 * p1);
        assert!(pite_emulated_step(&u, &gen, cfg.dt, 1.0).is_err());
        let zero_state = vec![0.0; psi.len()];
        assert!(pite_emulated_step(&zero_state, &gen, cfg.dt, 1.0).is_err());
    }

    #[test]
    fn exact_pipeline_tracks_reference() {
        let cfg = BurgersConfig { shots: None, ..small() };
        let trace = tsr_run(&cfg, ReferenceKind::Dense).unwrap();
        assert_eq!(trace.records.len(), 4);
        assert!(trace.final_error() < 1e-3);
        assert_eq!(trace.total_shots(), 0.0);
        let c: f64 = trace.records.iter().map(|r| r.p_k).product();
        assert_abs_diff_eq!(trace.records[3].cumulative, c, epsilon = 1e-15);
    }

    #[test]
    fn sampled_pipeline_accounts_shots() {
        let cfg = BurgersConfig {
            shots: Some(1000),
            ..small()
        };
        let trace = tsr_run(&cfg, ReferenceKind::Dense).unwrap();
        let expect: f64 = trace.records.iter().map(|r| 4000.0 / r.p_k).sum();
        assert_abs_diff_eq!(trace.total_shots(), expect, epsilon = 1e-6 * expect);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("step,p_k,cumulative,l2ns_error,shots\n1,"));
    }

    #[test]
    fn reference_kinds_agree_and_dissipate() {
        let cfg = small();
        let a = reference_solution(&cfg, ReferenceKind::Dense).unwrap();
        let b = reference_solution(&cfg, ReferenceKind::MatrixFree).unwrap();
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
        let n = chain_norms2(&cfg, &a).unwrap();
        assert!(n.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }

    #[test]
    fn config_validation() {
        assert!(BurgersConfig { kappa: 0.0, ..small() }.validate().is_err());
        assert!(BurgersConfig { steps: 0, ..small() }.validate().is_err());
        assert!(BurgersConfig {
            method: Method::Fsqae,
            ..small()
        }
        .validate()
        .is_err());
        let r = tsr_run_with_reference(&small(), &[vec![0.0; 128]]);
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }
}
