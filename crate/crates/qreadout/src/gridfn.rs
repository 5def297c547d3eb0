//! Grid functions, amplitude encoding and the Fourier conventions shared by
//! the readouts.
//!
//! Flat indices run with dimension 1 fastest. The DFT is the orthonormal
//! forward transform, which equals the inverse QFT applied per register.

use std::io::{BufRead, Write};

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::scalar::{from_usize, Real};

/// Folded Nyquist magnitude above which a reconstruction is flagged.
pub const NYQUIST_WARNING: f64 = 1e-8;

/// Per-dimension qubit counts and domain lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    qubits: Vec<usize>,
    lengths: Vec<T>,
}

impl<T: Real> GridSpec<T> {
    pub fn new(qubits: &[usize], lengths: &[T]) -> Result<Self> {
        if qubits.is_empty() || qubits.len() != lengths.len() {
            return Err(invalid("need one domain length per dimension"));
        }
        if qubits.iter().any(|&n| n == 0 || n > 30) {
            return Err(invalid("qubit counts must be in 1..=30"));
        }
        if lengths.iter().any(|&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(invalid("domain lengths must be positive"));
        }
        Ok(Self {
            qubits: qubits.to_vec(),
            lengths: lengths.to_vec(),
        })
    }

    /// Unit-length domain in every dimension.
    pub fn unit(qubits: &[usize]) -> Result<Self> {
        Self::new(qubits, &vec![T::one(); qubits.len()])
    }

    pub fn dim(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    /// `N_l = 2^{n_l}` per dimension.
    pub fn sizes(&self) -> Vec<usize> {
        self.qubits.iter().map(|&n| 1usize << n).collect()
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        1usize << self.qubits.iter().sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_qubits(&self) -> usize {
        self.qubits.iter().sum()
    }

    pub fn index(&self, j: &[usize]) -> Result<usize> {
        if j.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!("{}-d index on a {}-d grid", j.len(), self.dim())));
        }
        let mut flat = 0;
        let mut stride = 1;
        for (l, (&jl, n)) in j.iter().zip(self.sizes()).enumerate() {
            if jl >= n {
                return Err(Error::IndexOutOfRange(format!("j_{} = {jl} >= {n}", l + 1)));
            }
            flat += jl * stride;
            stride *= n;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.len() {
            return Err(Error::IndexOutOfRange(format!("flat index {flat}")));
        }
        Ok(self.multi_index_unchecked(flat))
    }

    pub(crate) fn multi_index_unchecked(&self, mut flat: usize) -> Vec<usize> {
        self.sizes()
            .into_iter()
            .map(|n| {
                let j = flat % n;
                flat /= n;
                j
            })
            .collect()
    }

    /// Coordinates `x_l = j_l L_l / N_l` of grid point `flat`.
    pub fn point(&self, flat: usize) -> Vec<T> {
        self.multi_index_unchecked(flat)
            .into_iter()
            .zip(self.sizes())
            .zip(&self.lengths)
            .map(|((j, n), &l)| from_usize::<T>(j) * l / from_usize::<T>(n))
            .collect()
    }
}

/// Real values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    spec: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                spec.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn<F: Fn(&[T]) -> T>(spec: GridSpec<T>, f: F) -> Result<Self> {
        let values = (0..spec.len()).map(|j| f(&spec.point(j))).collect();
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn norm(&self) -> T {
        norm2(&self.values)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_grid_csv(w, &self.spec, &[&self.values])
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (spec, mut cols) = read_grid_csv(r)?;
        if cols.len() != 1 {
            return Err(Error::Parse {
                line: 2,
                message: format!("expected 1 column, found {}", cols.len()),
            });
        }
        Self::new(spec, cols.remove(0))
    }
}

/// Amplitudes `psi_j = f_j / A_N` and the norm `A_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedState<T> {
    spec: GridSpec<T>,
    amplitudes: Vec<T>,
    norm: T,
}

impl<T: Real> NormalizedState<T> {
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    /// The normalization factor `A_N`.
    pub fn norm(&self) -> T {
        self.norm
    }

    pub fn complex_amplitudes(&self) -> Vec<Complex<T>> {
        self.amplitudes.iter().map(|&a| Complex::new(a, T::zero())).collect()
    }

    /// Decodes back to function values.
    pub fn decode(&self) -> GridFunction<T> {
        GridFunction {
            spec: self.spec.clone(),
            values: self.amplitudes.iter().map(|&a| a * self.norm).collect(),
        }
    }
}

pub fn encode<T: Real>(f: &GridFunction<T>) -> Result<NormalizedState<T>> {
    let norm = f.norm();
    if norm == T::zero() {
        return Err(Error::ZeroNorm);
    }
    Ok(NormalizedState {
        spec: f.spec.clone(),
        amplitudes: f.values.iter().map(|&v| v / norm).collect(),
        norm,
    })
}

/// Dense coefficient table `c_k` with the scale `C_N = A_N / sqrt(N)`.
///
/// Estimated tables store zeros outside the measured block.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficients<T> {
    spec: GridSpec<T>,
    coeffs: Vec<Complex<T>>,
    norm: T,
}

impl<T: Real> FourierCoefficients<T> {
    pub fn new(spec: GridSpec<T>, coeffs: Vec<Complex<T>>, norm: T) -> Result<Self> {
        if coeffs.len() != spec.len() {
            return Err(Error::ShapeMismatch("coefficient table size".into()));
        }
        Ok(Self { spec, coeffs, norm })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn norm(&self) -> T {
        self.norm
    }

    /// `C_N = A_N / sqrt(N)`.
    pub fn scale(&self) -> T {
        self.norm / from_usize::<T>(self.spec.len()).sqrt()
    }

    pub fn get(&self, k: &[usize]) -> Result<Complex<T>> {
        Ok(self.coeffs[self.spec.index(k)?])
    }

    /// Coefficient at a signed index.
    ///
    /// For `k_d >= 0` the entry at `k mod N` is returned; for `k_d < 0` the
    /// conjugate of the entry at `-k mod N`. An index of `±N_l` folds to 0.
    pub fn lookup(&self, k: &[i64]) -> Result<Complex<T>> {
        let sizes = self.spec.sizes();
        if k.len() != sizes.len() {
            return Err(Error::ShapeMismatch("signed index dimension".into()));
        }
        for (l, (&kl, &n)) in k.iter().zip(&sizes).enumerate() {
            if kl.unsigned_abs() as usize > n {
                return Err(Error::IndexOutOfRange(format!("k_{} = {kl}", l + 1)));
            }
        }
        let negative = *k.last().unwrap() < 0;
        let idx: Vec<usize> = k
            .iter()
            .zip(&sizes)
            .map(|(&kl, &n)| {
                let kl = if negative { -kl } else { kl };
                kl.rem_euclid(n as i64) as usize
            })
            .collect();
        let c = self.get(&idx)?;
        Ok(if negative { c.conj() } else { c })
    }
}

pub fn dft_coefficients<T: Real>(state: &NormalizedState<T>) -> FourierCoefficients<T> {
    let mut data = state.complex_amplitudes();
    fftn(&mut data, &state.spec.sizes(), false);
    FourierCoefficients {
        spec: state.spec.clone(),
        coeffs: data,
        norm: state.norm,
    }
}

/// In-place orthonormal multidimensional DFT, dimension 1 fastest.
///
/// The forward transform uses `exp(-2 pi i j k / N)`.
pub fn fftn<T: Real>(data: &mut [Complex<T>], sizes: &[usize], inverse: bool) {
    let total: usize = sizes.iter().product();
    assert_eq!(data.len(), total, "fftn: data length does not match sizes");
    let mut planner = FftPlanner::<T>::new();
    let mut stride = 1;
    for &n in sizes {
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        if stride == 1 {
            fft.process(data);
        } else {
            let mut line = vec![Complex::new(T::zero(), T::zero()); n];
            let block = stride * n;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
    let scale = T::one() / from_usize::<T>(total).sqrt();
    for v in data.iter_mut() {
        *v = *v * scale;
    }
}

/// Result of a truncated Fourier reconstruction on the full grid.
#[derive(Clone, Debug)]
pub struct Reconstructed<T> {
    pub function: GridFunction<T>,
    /// Largest discarded imaginary part.
    pub max_imag: T,
    /// Sum of coefficient magnitudes on Nyquist rows that the truncation drops.
    pub folded_magnitude: T,
}

impl<T: Real> Reconstructed<T> {
    pub fn nyquist_warning(&self) -> bool {
        self.folded_magnitude.as_f64() > NYQUIST_WARNING
    }
}

/// Visits every signed index with `|k_l| < m_l`.
pub(crate) fn for_each_signed<F: FnMut(&[i64])>(m: &[usize], mut f: F) {
    let d = m.len();
    let mut k: Vec<i64> = m.iter().map(|&ml| 1 - ml as i64).collect();
    loop {
        f(&k);
        let mut l = 0;
        loop {
            if l == d {
                return;
            }
            if k[l] < m[l] as i64 - 1 {
                k[l] += 1;
                break;
            }
            k[l] = 1 - m[l] as i64;
            l += 1;
        }
    }
}

fn check_truncation<T: Real>(spec: &GridSpec<T>, m: &[usize]) -> Result<()> {
    if m.len() != spec.dim() {
        return Err(Error::ShapeMismatch("one truncation parameter per dimension".into()));
    }
    for (l, (&ml, n)) in m.iter().zip(spec.sizes()).enumerate() {
        if ml == 0 || 2 * ml > n {
            return Err(invalid(format!("M_{} = {ml} outside 1..={}", l + 1, n / 2)));
        }
    }
    Ok(())
}

/// Truncated series `C_N sum_{|k_l| < M_l} c_k exp(2 pi i k.x / L)` on the grid.
pub fn reconstruct<T: Real>(coeffs: &FourierCoefficients<T>, m: &[usize]) -> Result<Reconstructed<T>> {
    let spec = &coeffs.spec;
    check_truncation(spec, m)?;
    let sizes = spec.sizes();
    let mut full = vec![Complex::new(T::zero(), T::zero()); spec.len()];
    let mut err = None;
    for_each_signed(m, |k| {
        if err.is_some() {
            return;
        }
        match coeffs.lookup(k) {
            Ok(c) => {
                let idx: Vec<usize> = k
                    .iter()
                    .zip(&sizes)
                    .map(|(&kl, &n)| kl.rem_euclid(n as i64) as usize)
                    .collect();
                full[spec.index(&idx).expect("in range")] = c;
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut folded = T::zero();
    for (flat, c) in coeffs.coeffs.iter().enumerate() {
        let j = spec.multi_index_unchecked(flat);
        let on_dropped_nyquist = j
            .iter()
            .zip(&sizes)
            .zip(m)
            .any(|((&jl, &n), &ml)| 2 * ml == n && jl == n / 2);
        if on_dropped_nyquist {
            folded += c.norm();
        }
    }
    fftn(&mut full, &sizes, true);
    let a = coeffs.norm;
    let mut max_imag = T::zero();
    let values = full
        .iter()
        .map(|z| {
            max_imag = max_imag.max(z.im.abs() * a);
            z.re * a
        })
        .collect();
    Ok(Reconstructed {
        function: GridFunction::new(spec.clone(), values)?,
        max_imag,
        folded_magnitude: folded,
    })
}

/// Evaluates the truncated series at arbitrary points.
pub fn reconstruct_at<T: Real>(coeffs: &FourierCoefficients<T>, m: &[usize], points: &[Vec<T>]) -> Result<Vec<T>> {
    let spec = &coeffs.spec;
    check_truncation(spec, m)?;
    let mut terms = Vec::new();
    let mut err = None;
    for_each_signed(m, |k| match coeffs.lookup(k) {
        Ok(c) => terms.push((k.to_vec(), c)),
        Err(e) => err = Some(e),
    });
    if let Some(e) = err {
        return Err(e);
    }
    let scale = coeffs.scale();
    points
        .iter()
        .map(|x| {
            if x.len() != spec.dim() {
                return Err(Error::ShapeMismatch("point dimension".into()));
            }
            let mut s = Complex::new(T::zero(), T::zero());
            for (k, c) in &terms {
                let mut phase = T::zero();
                for ((&kl, &xl), &ll) in k.iter().zip(x).zip(&spec.lengths) {
                    phase += T::TAU() * T::lit(kl as f64) * xl / ll;
                }
                s += c * Complex::from_polar(T::one(), phase);
            }
            Ok(s.re * scale)
        })
        .collect()
}

pub(crate) fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
}

/// `|| a/|a| - b/|b| ||_2`.
pub fn l2ns_error<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} values", a.len(), b.len())));
    }
    let (na, nb) = (norm2(a), norm2(b));
    if na == T::zero() || nb == T::zero() {
        return Err(Error::ZeroNorm);
    }
    Ok(a.iter()
        .zip(b)
        .fold(T::zero(), |s, (&x, &y)| {
            let d = x / na - y / nb;
            s + d * d
        })
        .sqrt())
}

/// Writes the grid CSV format; several columns are comma separated.
pub fn write_grid_csv<T: Real, W: Write>(mut w: W, spec: &GridSpec<T>, columns: &[&[T]]) -> Result<()> {
    if columns.iter().any(|c| c.len() != spec.len()) {
        return Err(Error::ShapeMismatch("column length does not match the grid".into()));
    }
    let join = |it: Vec<String>| it.join(",");
    writeln!(
        w,
        "#qgrid v1 d={} n={} L={}",
        spec.dim(),
        join(spec.qubits.iter().map(|n| n.to_string()).collect()),
        join(spec.lengths.iter().map(|l| l.to_string()).collect())
    )?;
    let mut line = String::new();
    for i in 0..spec.len() {
        line.clear();
        for (c, col) in columns.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", col[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn parse_header<T: Real>(line: &str) -> Result<GridSpec<T>> {
    let bad = |m: &str| Error::Parse {
        line: 1,
        message: m.to_string(),
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#qgrid") || parts.next() != Some("v1") {
        return Err(bad("missing '#qgrid v1' header"));
    }
    let (mut d, mut n, mut l) = (None, None, None);
    for p in parts {
        let (key, val) = p.split_once('=').ok_or_else(|| bad("malformed header field"))?;
        match key {
            "d" => d = Some(val.parse::<usize>().map_err(|_| bad("bad d"))?),
            "n" => {
                n = Some(
                    val.split(',')
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad n"))?,
                )
            }
            "L" => {
                l = Some(
                    val.split(',')
                        .map(|s| s.parse::<f64>().map(T::lit))
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad L"))?,
                )
            }
            _ => return Err(bad("unknown header field")),
        }
    }
    let (d, n, l) = match (d, n, l) {
        (Some(d), Some(n), Some(l)) => (d, n, l),
        _ => return Err(bad("header needs d, n and L")),
    };
    if n.len() != d || l.len() != d {
        return Err(bad("header dimension mismatch"));
    }
    GridSpec::new(&n, &l).map_err(|e| bad(&e.to_string()))
}

/// Reads the grid CSV format, returning one vector per column.
pub fn read_grid_csv<T: Real, R: BufRead>(r: R) -> Result<(GridSpec<T>, Vec<Vec<T>>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })??;
    let spec = parse_header::<T>(header.trim())?;
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 2;
        let vals = line
            .split(',')
            .map(|s| {
                let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("not a number: {s:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "non-finite value".into(),
                    });
                }
                Ok(T::lit(v))
            })
            .collect::<Result<Vec<T>>>()?;
        if cols.is_empty() {
            cols = vec![Vec::with_capacity(spec.len()); vals.len()];
        } else if vals.len() != cols.len() {
            return Err(Error::Parse {
                line: lineno,
                message: "inconsistent column count".into(),
            });
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
        rows += 1;
    }
    if rows != spec.len() {
        return Err(Error::Parse {
            line: rows + 1,
            message: format!("expected {} rows, found {rows}", spec.len()),
        });
    }
    Ok((spec, cols))
}
