//! Restricted cubic spline basis in log time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quantile_sorted;

/// Boundary and internal knots on the log-time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineKnots {
    lower: f64,
    upper: f64,
    internal: Vec<f64>,
}

impl SplineKnots {
    pub fn new(lower: f64, upper: f64, internal: Vec<f64>) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || internal.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidModel("spline knots must be finite".into()));
        }
        if internal.is_empty() {
            if lower > upper {
                return Err(Error::InvalidModel("boundary knots out of order".into()));
            }
        } else {
            let mut prev = lower;
            for &k in internal.iter().chain(std::iter::once(&upper)) {
                if k <= prev {
                    return Err(Error::InvalidModel(
                        "spline knots must be strictly increasing with boundaries bracketing internal knots".into(),
                    ));
                }
                prev = k;
            }
        }
        Ok(SplineKnots { lower, upper, internal })
    }

    /// Boundary knots at the extreme log event times; `count` internal knots at
    /// the `j / (count + 1)` sample quantiles (median for one knot, tertiles for
    /// two, quartiles for three).
    pub fn from_log_event_times(log_times: &[f64], count: usize) -> Result<Self> {
        if log_times.is_empty() {
            return Err(Error::InsufficientData("no event times to place spline knots".into()));
        }
        let mut sorted = log_times.to_vec();
        sorted.sort_by(f64::total_cmp);
        let internal = (1..=count)
            .map(|j| quantile_sorted(&sorted, j as f64 / (count + 1) as f64))
            .collect();
        SplineKnots::new(sorted[0], sorted[sorted.len() - 1], internal)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn internal(&self) -> &[f64] {
        &self.internal
    }

    pub fn knot_count(&self) -> usize {
        self.internal.len()
    }

    /// Basis dimension including intercept and linear term.
    pub fn dim(&self) -> usize {
        self.internal.len() + 2
    }

    fn lambda(&self, k: f64) -> f64 {
        (self.upper - k) / (self.upper - self.lower)
    }

    /// Basis `(1, x, v_1(x), ..., v_m(x))` at log time `x`.
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.push(1.0);
        out.push(x);
        let cube = |d: f64| if d > 0.0 { d * d * d } else { 0.0 };
        for &k in &self.internal {
            let l = self.lambda(k);
            out.push(cube(x - k) - l * cube(x - self.lower) - (1.0 - l) * cube(x - self.upper));
        }
        out
    }

    /// Derivative of each basis function with respect to `x`.
    pub fn basis_derivative(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.push(0.0);
        out.push(1.0);
        let sq = |d: f64| if d > 0.0 { 3.0 * d * d } else { 0.0 };
        for &k in &self.internal {
            let l = self.lambda(k);
            out.push(sq(x - k) - l * sq(x - self.lower) - (1.0 - l) * sq(x - self.upper));
        }
        out
    }

    /// Spline value and slope `(s(x), s'(x))` for the given coefficients.
    pub fn evaluate(&self, coefficients: &[f64], x: f64) -> (f64, f64) {
        let mut s = coefficients[0] + coefficients[1] * x;
        let mut ds = coefficients[1];
        for (j, &k) in self.internal.iter().enumerate() {
            let l = self.lambda(k);
            let g = coefficients[j + 2];
            let (a, b, c) = (x - k, x - self.lower, x - self.upper);
            let cube = |d: f64| if d > 0.0 { d * d * d } else { 0.0 };
            let sq = |d: f64| if d > 0.0 { 3.0 * d * d } else { 0.0 };
            s += g * (cube(a) - l * cube(b) - (1.0 - l) * cube(c));
            ds += g * (sq(a) - l * sq(b) - (1.0 - l) * sq(c));
        }
        (s, ds)
    }
}
