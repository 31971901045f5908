//! Parametric event-time distributions with covariate effects on a
//! proportional-hazards, proportional-odds or linear-probit scale.

mod baseline;
mod link;
mod model;
mod spline;

pub use baseline::{Baseline, Family};
pub use link::LinkScale;
pub use model::{Conditional, SurvivalModel};
pub use spline::SplineKnots;

/// `g(S)` for the given link; see [`LinkScale::transform_survival`].
pub fn transform_survival(link: LinkScale, s: f64) -> crate::Result<f64> {
    link.transform_survival(s)
}

/// Restricted cubic spline basis `(1, x, v_1(x), ...)` at log time `log_t`.
pub fn spline_basis(knots: &SplineKnots, log_t: f64) -> Vec<f64> {
    knots.basis(log_t)
}
