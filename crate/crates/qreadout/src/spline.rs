//! Natural cubic and linear splines on rectilinear node sets, applied one
//! axis at a time.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplineOrder {
    Linear,
    #[default]
    Cubic,
}

/// Interpolation from a fixed node set to a fixed target set along one axis.
///
/// One node gives a constant, two nodes a line; outside the node range the
/// interpolant is continued linearly with the end slope.
#[derive(Clone, Debug)]
pub struct AxisInterpolator<T> {
    nodes: Vec<T>,
    order: SplineOrder,
    // (interval, local coordinate or offset, position class)
    plan: Vec<(usize, T, Where)>,
    // Thomas-algorithm factors for the interior second derivatives.
    diag: Vec<T>,
    lower: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Where {
    Below,
    Inside,
    Above,
}

impl<T: Real> AxisInterpolator<T> {
    pub fn new(nodes: &[T], targets: &[T], order: SplineOrder) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("spline needs at least one node"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("spline nodes must be strictly increasing"));
        }
        let n = nodes.len();
        let order = if n < 3 { SplineOrder::Linear } else { order };
        let plan = targets
            .iter()
            .map(|&x| {
                if n == 1 {
                    return (0, T::zero(), Where::Inside);
                }
                if x < nodes[0] {
                    (0, x - nodes[0], Where::Below)
                } else if x > nodes[n - 1] {
                    (n - 2, x - nodes[n - 1], Where::Above)
                } else {
                    let i = nodes.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
                    let h = nodes[i + 1] - nodes[i];
                    (i, (x - nodes[i]) / h, Where::Inside)
                }
            })
            .collect();
        let (mut diag, mut lower) = (Vec::new(), Vec::new());
        if order == SplineOrder::Cubic {
            // Rows i = 1..n-2: h_{i-1} M_{i-1} + 2(h_{i-1}+h_i) M_i + h_i M_{i+1} = r_i.
            let h: Vec<T> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
            let two = T::lit(2.0);
            for i in 1..n - 1 {
                let b = two * (h[i - 1] + h[i]);
                if i == 1 {
                    diag.push(b);
                    lower.push(T::zero());
                } else {
                    let w = h[i - 1] / diag[i - 2];
                    lower.push(w);
                    diag.push(b - w * h[i - 1]);
                }
            }
        }
        Ok(Self {
            nodes: nodes.to_vec(),
            order,
            plan,
            diag,
            lower,
        })
    }

    pub fn targets(&self) -> usize {
        self.plan.len()
    }

    pub fn nodes(&self) -> usize {
        self.nodes.len()
    }

    fn second_derivatives(&self, y: &[T]) -> Vec<T> {
        let n = self.nodes.len();
        let x = &self.nodes;
        let six = T::lit(6.0);
        let mut m = vec![T::zero(); n];
        let mut r: Vec<T> = (1..n - 1)
            .map(|i| {
                six * ((y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]))
            })
            .collect();
        for k in 1..r.len() {
            let prev = r[k - 1];
            r[k] -= self.lower[k] * prev;
        }
        for k in (0..r.len()).rev() {
            let h = x[k + 2] - x[k + 1];
            let next = if k + 1 < r.len() { m[k + 2] } else { T::zero() };
            m[k + 1] = (r[k] - h * next) / self.diag[k];
        }
        m
    }

    /// Interpolates node values `y` into `out` (one value per target).
    pub fn apply(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.nodes.len());
        debug_assert_eq!(out.len(), self.plan.len());
        let n = self.nodes.len();
        if n == 1 {
            out.iter_mut().for_each(|o| *o = y[0]);
            return;
        }
        let x = &self.nodes;
        match self.order {
            SplineOrder::Linear => {
                for (o, &(i, t, w)) in out.iter_mut().zip(&self.plan) {
                    let slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
                    *o = match w {
                        Where::Inside => y[i] + t * (y[i + 1] - y[i]),
                        Where::Below => y[0] + slope * t,
                        Where::Above => y[n - 1] + slope * t,
                    };
                }
            }
            SplineOrder::Cubic => {
                let m = self.second_derivatives(y);
                let six = T::lit(6.0);
                let two = T::lit(2.0);
                let h0 = x[1] - x[0];
                let hn = x[n - 1] - x[n - 2];
                let s0 = (y[1] - y[0]) / h0 - h0 * (two * m[0] + m[1]) / six;
                let sn = (y[n - 1] - y[n - 2]) / hn + hn * (m[n - 2] + two * m[n - 1]) / six;
                for (o, &(i, t, w)) in out.iter_mut().zip(&self.plan) {
                    *o = match w {
                        Where::Below => y[0] + s0 * t,
                        Where::Above => y[n - 1] + sn * t,
                        Where::Inside => {
                            let h = x[i + 1] - x[i];
                            let b = t;
                            let a = T::one() - b;
                            a * y[i]
                                + b * y[i + 1]
                                + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / six
                        }
                    };
                }
            }
        }
    }
}

/// Tensor-product interpolation of `values` (dimension 1 fastest) from the
/// node grid to the target grid.
pub fn interpolate_tensor<T: Real>(
    nodes: &[Vec<T>],
    values: &[T],
    targets: &[Vec<T>],
    order: SplineOrder,
) -> Result<Vec<T>> {
    if nodes.len() != targets.len() {
        return Err(Error::ShapeMismatch("node and target dimensions differ".into()));
    }
    let mut shape: Vec<usize> = nodes.iter().map(Vec::len).collect();
    if values.len() != shape.iter().product::<usize>() {
        return Err(Error::ShapeMismatch("value count does not match the node grid".into()));
    }
    let mut data = values.to_vec();
    for axis in 0..nodes.len() {
        let interp = AxisInterpolator::new(&nodes[axis], &targets[axis], order)?;
        data = apply_axis(&data, &shape, axis, &interp);
        shape[axis] = interp.targets();
    }
    Ok(data)
}

/// Applies a 1-D interpolator along `axis` of a dimension-1-fastest array.
pub fn apply_axis<T: Real>(data: &[T], shape: &[usize], axis: usize, interp: &AxisInterpolator<T>) -> Vec<T> {
    let stride: usize = shape[..axis].iter().product();
    let n_in = shape[axis];
    let n_out = interp.targets();
    let outer: usize = shape[axis + 1..].iter().product();
    let mut out = vec![T::zero(); stride * n_out * outer];
    let mut line = vec![T::zero(); n_in];
    let mut res = vec![T::zero(); n_out];
    for o in 0..outer {
        for s in 0..stride {
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[s + stride * (i + n_in * o)];
            }
            interp.apply(&line, &mut res);
            for (i, v) in res.iter().enumerate() {
                out[s + stride * (i + n_out * o)] = *v;
            }
        }
    }
    out
}
