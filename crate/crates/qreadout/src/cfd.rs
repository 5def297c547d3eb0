//! Velocity-field ingestion, spline upsampling, derived fields (curl and
//! stream function) and heatmap output for readout-based visualization.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bench::{run_scaling_experiment, Abscissa, ScalingRun, TestFunction};
use crate::error::{invalid, Error, Result};
use crate::gridfn::{encode, read_grid_csv, write_grid_csv, GridFunction, GridSpec};
use crate::readout_sampling::{readout, Method, ReadoutConfig, Reconstruction};
use crate::scalar::{from_usize, Real};
use crate::spline::{interpolate_tensor, SplineOrder};

/// Two-component velocity field on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField<T> {
    ux: GridFunction<T>,
    uy: GridFunction<T>,
    /// Known lower bounds of `(u_x, u_y)`.
    pub minima: Option<[T; 2]>,
}

impl<T: Real> VelocityField<T> {
    pub fn new(ux: GridFunction<T>, uy: GridFunction<T>) -> Result<Self> {
        if ux.spec() != uy.spec() {
            return Err(Error::ShapeMismatch("velocity components on different grids".into()));
        }
        if ux.spec().dim() != 2 {
            return Err(invalid("velocity fields are two-dimensional"));
        }
        Ok(Self { ux, uy, minima: None })
    }

    pub fn from_fn(spec: GridSpec<T>, ux: impl Fn(&[T]) -> T, uy: impl Fn(&[T]) -> T) -> Result<Self> {
        Self::new(GridFunction::from_fn(spec.clone(), ux)?, GridFunction::from_fn(spec, uy)?)
    }

    pub fn spec(&self) -> &GridSpec<T> {
        self.ux.spec()
    }

    pub fn ux(&self) -> &GridFunction<T> {
        &self.ux
    }

    pub fn uy(&self) -> &GridFunction<T> {
        &self.uy
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_grid_csv(w, self.spec(), &[self.ux.values(), self.uy.values()])
    }
}

/// Field data as read from disk, before any resampling.
#[derive(Clone, Debug, PartialEq)]
pub struct RawField<T> {
    /// Node coordinates per axis.
    pub nodes: Vec<Vec<T>>,
    pub lengths: Vec<T>,
    /// Dimension-1-fastest values.
    pub ux: Vec<T>,
    pub uy: Vec<T>,
}

impl<T: Real> RawField<T> {
    pub fn sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }

    /// True when the nodes form a `2^n` grid at `j L / N`, usable without
    /// resampling.
    pub fn is_power_of_two(&self) -> bool {
        self.nodes.iter().zip(&self.lengths).all(|(n, &l)| {
            let len = n.len();
            len.is_power_of_two()
                && n.iter()
                    .enumerate()
                    .all(|(j, &x)| (x - from_usize::<T>(j) * l / from_usize::<T>(len)).abs() <= T::epsilon() * l * T::lit(8.0))
        })
    }

    pub fn into_field(self) -> Result<VelocityField<T>> {
        if !self.is_power_of_two() {
            return Err(invalid(format!("grid {:?} needs upsampling to powers of two", self.sizes())));
        }
        let qubits: Vec<usize> = self.sizes().iter().map(|n| n.trailing_zeros() as usize).collect();
        let spec = GridSpec::new(&qubits, &self.lengths)?;
        VelocityField::new(GridFunction::new(spec.clone(), self.ux)?, GridFunction::new(spec, self.uy)?)
    }
}

impl<T: Real> From<&VelocityField<T>> for RawField<T> {
    fn from(f: &VelocityField<T>) -> Self {
        let spec = f.spec();
        let nodes = spec
            .sizes()
            .into_iter()
            .zip(spec.lengths())
            .map(|(n, &l)| (0..n).map(|j| from_usize::<T>(j) * l / from_usize::<T>(n)).collect())
            .collect();
        Self {
            nodes,
            lengths: spec.lengths().to_vec(),
            ux: f.ux.values().to_vec(),
            uy: f.uy.values().to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFormat {
    /// Grid CSV with two value columns.
    GridCsv,
    /// One `u_x u_y` pair per line (comma or whitespace separated) on an
    /// `n x n` grid over `[0,1]^2` including both boundaries, x fastest.
    Matrix,
}

pub fn load_field<T: Real>(path: &std::path::Path, format: FieldFormat) -> Result<RawField<T>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_field(file, format)
}

pub fn read_field<T: Real, R: BufRead>(r: R, format: FieldFormat) -> Result<RawField<T>> {
    match format {
        FieldFormat::GridCsv => {
            let (spec, cols) = read_grid_csv::<T, _>(r)?;
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected 2 value columns, found {}", cols.len()),
                });
            }
            let mut it = cols.into_iter();
            let (ux, uy) = (it.next().unwrap(), it.next().unwrap());
            let field = VelocityField::new(GridFunction::new(spec.clone(), ux)?, GridFunction::new(spec, uy)?)?;
            Ok(RawField::from(&field))
        }
        FieldFormat::Matrix => {
            let (mut ux, mut uy) = (Vec::new(), Vec::new());
            for (i, line) in r.lines().enumerate() {
                let line = line?;
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                let vals: Vec<&str> = t.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
                if vals.len() != 2 {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected 2 values, found {}", vals.len()),
                    });
                }
                let parse = |s: &str| -> Result<T> {
                    let v: f64 = s.parse().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("bad number {s:?}"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            line: i + 1,
                            message: "non-finite value".into(),
                        });
                    }
                    Ok(T::lit(v))
                };
                ux.push(parse(vals[0])?);
                uy.push(parse(vals[1])?);
            }
            let n = (ux.len() as f64).sqrt().round() as usize;
            if n < 2 || n * n != ux.len() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("{} points do not form a square grid", ux.len()),
                });
            }
            let axis: Vec<T> = (0..n).map(|j| from_usize::<T>(j) / from_usize::<T>(n - 1)).collect();
            Ok(RawField {
                nodes: vec![axis.clone(), axis],
                lengths: vec![T::one(), T::one()],
                ux,
                uy,
            })
        }
    }
}

/// Cubic tensor-product spline from the raw nodes to a `2^q` grid.
pub fn spline_upsample<T: Real>(raw: &RawField<T>, qubits: &[usize]) -> Result<VelocityField<T>> {
    if qubits.len() != raw.nodes.len() {
        return Err(Error::ShapeMismatch("one target size per dimension".into()));
    }
    for (&q, n) in qubits.iter().zip(raw.sizes()) {
        if (1usize << q) < n {
            return Err(invalid(format!("target 2^{q} smaller than source {n}")));
        }
    }
    let spec = GridSpec::new(qubits, &raw.lengths)?;
    let targets: Vec<Vec<T>> = spec
        .sizes()
        .into_iter()
        .zip(spec.lengths())
        .map(|(n, &l)| (0..n).map(|j| from_usize::<T>(j) * l / from_usize::<T>(n)).collect())
        .collect();
    let ux = interpolate_tensor(&raw.nodes, &raw.ux, &targets, SplineOrder::Cubic)?;
    let uy = interpolate_tensor(&raw.nodes, &raw.uy, &targets, SplineOrder::Cubic)?;
    VelocityField::new(GridFunction::new(spec.clone(), ux)?, GridFunction::new(spec, uy)?)
}

/// Fourth-order first derivative along `axis`; one-sided fourth-order
/// stencils at the ends unless `periodic`.
pub fn derivative<T: Real>(f: &GridFunction<T>, axis: usize, periodic: bool) -> Result<Vec<T>> {
    let spec = f.spec();
    let sizes = spec.sizes();
    let n = sizes[axis];
    if n < 5 {
        return Err(invalid(format!("derivative needs at least 5 points, axis has {n}")));
    }
    let h = spec.lengths()[axis] / from_usize::<T>(n);
    let stride: usize = sizes[..axis].iter().product();
    let c = |v: f64| T::lit(v);
    let twelve_h = c(12.0) * h;
    let v = f.values();
    let mut out = vec![T::zero(); v.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = (flat / stride) % n;
        let base = flat - i * stride;
        let at = |j: usize| v[base + j * stride];
        let wrap = |d: isize| at(((i as isize + d).rem_euclid(n as isize)) as usize);
        *o = if periodic || (i >= 2 && i + 2 < n) {
            (-wrap(2) + c(8.0) * wrap(1) - c(8.0) * wrap(-1) + wrap(-2)) / twelve_h
        } else if i == 0 {
            (c(-25.0) * at(0) + c(48.0) * at(1) - c(36.0) * at(2) + c(16.0) * at(3) - c(3.0) * at(4)) / twelve_h
        } else if i == 1 {
            (c(-3.0) * at(0) - c(10.0) * at(1) + c(18.0) * at(2) - c(6.0) * at(3) + at(4)) / twelve_h
        } else if i == n - 1 {
            (c(25.0) * at(n - 1) - c(48.0) * at(n - 2) + c(36.0) * at(n - 3) - c(16.0) * at(n - 4) + c(3.0) * at(n - 5))
                / twelve_h
        } else {
            (c(3.0) * at(n - 1) + c(10.0) * at(n - 2) - c(18.0) * at(n - 3) + c(6.0) * at(n - 4) - at(n - 5)) / twelve_h
        };
    }
    Ok(out)
}

/// Vorticity `w = d_x u_y - d_y u_x` with fourth-order differences.
pub fn curl_9pt<T: Real>(field: &VelocityField<T>, periodic: bool) -> Result<GridFunction<T>> {
    let dxuy = derivative(&field.uy, 0, periodic)?;
    let dyux = derivative(&field.ux, 1, periodic)?;
    GridFunction::new(field.spec().clone(), dxuy.iter().zip(&dyux).map(|(&a, &b)| a - b).collect())
}

/// Stream function with `u_x = d_y psi`: cumulative trapezoid of `u_x` in
/// `y` from `psi(., 0) = 0`.
pub fn stream_function<T: Real>(field: &VelocityField<T>) -> Result<GridFunction<T>> {
    let spec = field.spec();
    let sizes = spec.sizes();
    let (nx, ny) = (sizes[0], sizes[1]);
    let h = spec.lengths()[1] / from_usize::<T>(ny);
    let half = T::lit(0.5) * h;
    let u = field.ux.values();
    let mut psi = vec![T::zero(); u.len()];
    for j in 1..ny {
        for i in 0..nx {
            psi[i + nx * j] = psi[i + nx * (j - 1)] + half * (u[i + nx * (j - 1)] + u[i + nx * j]);
        }
    }
    GridFunction::new(spec.clone(), psi)
}

/// Subtracts known minima componentwise.
pub fn shift_field_nonnegative<T: Real>(field: &VelocityField<T>, minima: [T; 2]) -> Result<VelocityField<T>> {
    let shift = |g: &GridFunction<T>, m: T, name: &str| -> Result<GridFunction<T>> {
        let v: Vec<T> = g.values().iter().map(|&x| x - m).collect();
        if let Some(bad) = v.iter().find(|&&x| x < T::zero()) {
            return Err(invalid(format!("{name} minimum {m} is above a field value (shifted value {bad})")));
        }
        GridFunction::new(g.spec().clone(), v)
    };
    let mut out = VelocityField::new(shift(&field.ux, minima[0], "u_x")?, shift(&field.uy, minima[1], "u_y")?)?;
    out.minima = Some([T::zero(), T::zero()]);
    Ok(out)
}

/// Adds the minima back after readout.
pub fn unshift_field<T: Real>(field: &VelocityField<T>, minima: [T; 2]) -> Result<VelocityField<T>> {
    let add = |g: &GridFunction<T>, m: T| GridFunction::new(g.spec().clone(), g.values().iter().map(|&x| x + m).collect());
    let mut out = VelocityField::new(add(&field.ux, minima[0])?, add(&field.uy, minima[1])?)?;
    out.minima = Some(minima);
    Ok(out)
}

/// Displayed quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Ux,
    Uy,
    Curl,
    Stream,
}

impl Quantity {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ux" => Ok(Self::Ux),
            "uy" => Ok(Self::Uy),
            "curl" => Ok(Self::Curl),
            "stream" => Ok(Self::Stream),
            other => Err(invalid(format!("unknown quantity {other:?}"))),
        }
    }
}

pub fn quantity<T: Real>(field: &VelocityField<T>, q: Quantity, periodic: bool) -> Result<GridFunction<T>> {
    match q {
        Quantity::Ux => Ok(field.ux.clone()),
        Quantity::Uy => Ok(field.uy.clone()),
        Quantity::Curl => curl_9pt(field, periodic),
        Quantity::Stream => stream_function(field),
    }
}

/// Reads a grid function out with `method`. Real-space methods encode
/// `f - min f` and add the minimum back, which models known minima.
pub fn readout_grid<T: Real>(f: &GridFunction<T>, method: Method, cfg: &ReadoutConfig<T>) -> Result<Reconstruction<T>> {
    let mut cfg = cfg.clone();
    let state = if matches!(method, Method::Rsr | Method::Arsr) {
        let m = f.values().iter().copied().fold(T::infinity(), T::min);
        let shift = m.min(T::zero());
        cfg.shift = shift;
        encode(&GridFunction::new(f.spec().clone(), f.values().iter().map(|&x| x - shift).collect())?)?
    } else {
        encode(f)?
    };
    readout(method, &state, &cfg)
}

/// ASCII PGM (P2, maxval 65535) of a 2D grid function; the first row is
/// `y = 0`. A constant image maps to mid-gray. The data range is kept in a
/// `# min <lo> max <hi>` comment line.
pub fn write_pgm<T: Real, W: Write>(mut w: W, f: &GridFunction<T>) -> Result<()> {
    let spec = f.spec();
    if spec.dim() != 2 {
        return Err(invalid("heatmaps need a 2D grid"));
    }
    let sizes = spec.sizes();
    let v = f.values();
    let lo = v.iter().copied().fold(T::infinity(), T::min).as_f64();
    let hi = v.iter().copied().fold(T::neg_infinity(), T::max).as_f64();
    writeln!(w, "P2")?;
    writeln!(w, "# min {lo} max {hi}")?;
    writeln!(w, "{} {}", sizes[0], sizes[1])?;
    writeln!(w, "65535")?;
    for j in 0..sizes[1] {
        let row: Vec<String> = (0..sizes[0])
            .map(|i| {
                let x = v[i + sizes[0] * j].as_f64();
                let g = if hi > lo {
                    ((x - lo) / (hi - lo) * 65535.0).round() as u32
                } else {
                    32768
                };
                g.to_string()
            })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Taylor-Green cell on `[0,1]^2`: `u = (sin(pi x) cos(pi y), -cos(pi x) sin(pi y))`,
/// stream function `sin(pi x) sin(pi y) / pi`.
pub fn taylor_green<T: Real>(qubits: usize) -> Result<VelocityField<T>> {
    let pi = T::PI();
    VelocityField::from_fn(
        GridSpec::unit(&[qubits, qubits])?,
        |x| (pi * x[0]).sin() * (pi * x[1]).cos(),
        |x| -(pi * x[0]).cos() * (pi * x[1]).sin(),
    )
}

/// Divergence-free cavity analog with a moving lid at `y = 1`:
/// stream function `sin^2(pi x) y^3 / 3`.
pub fn cavity_analog<T: Real>(qubits: usize) -> Result<VelocityField<T>> {
    let pi = T::PI();
    let three = T::lit(3.0);
    VelocityField::from_fn(
        GridSpec::unit(&[qubits, qubits])?,
        |x| (pi * x[0]).sin().powi(2) * x[1] * x[1],
        |x| -pi * (T::lit(2.0) * pi * x[0]).sin() * x[1].powi(3) / three,
    )
}

/// FSR and RSR error against shots on the stream function of a synthetic
/// field (Taylor-Green cell by default).
pub fn cfd_scaling(
    field: &VelocityField<f64>,
    q: Quantity,
    shots: &[u64],
    repeats: usize,
    seed: u64,
    methods: &[Method],
) -> Result<Vec<ScalingRun>> {
    let g = quantity(field, q, false)?;
    let qubits = g.spec().qubits()[0];
    if g.values().iter().any(|&v| v < 0.0) && methods.iter().any(|m| matches!(m, Method::Rsr | Method::Arsr)) {
        return Err(invalid("real-space scaling runs need a nonnegative quantity"));
    }
    let f = TestFunction::Grid(g);
    methods
        .iter()
        .map(|&m| run_scaling_experiment(m, &f, qubits, &Abscissa::Shots(shots.to_vec()), repeats, seed))
        .collect()
}
