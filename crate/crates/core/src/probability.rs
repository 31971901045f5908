//! Conditional probability that a subject still at risk at the interim has the
//! event within the next `dt` time units, accounting for dropout.

use serde::{Deserialize, Serialize};

use crate::data::InterimDataset;
use crate::error::{Error, Result};
use crate::fit::DropoutModel;
use crate::numeric::quadrature::{integrate, QuadOptions};
use crate::survival::{Baseline, Conditional, LinkScale, SurvivalModel};

/// Smallest at-risk probability the formulas divide by.
const MIN_AT_RISK: f64 = 1e-300;

/// Violations of `[0, 1]` up to this size are treated as quadrature noise.
const CLAMP_SLACK: f64 = 1e-10;

/// Width of the interval excised at an integrable density singularity.
const SLIVER: f64 = 1e-8;

/// Follow-up already accrued at the interim and the subject's covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtRiskProfile {
    pub tau: f64,
    pub z: Vec<f64>,
}

/// Event probabilities for the at-risk subjects, in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalProbabilityVector {
    pub ids: Vec<String>,
    pub pi: Vec<f64>,
    pub horizon: f64,
}

impl ConditionalProbabilityVector {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Expected number of additional events, `Σ π_j`.
    pub fn expected_events(&self) -> f64 {
        self.pi.iter().sum()
    }
}

fn check_inputs(prof: &AtRiskProfile, dt: f64) -> Result<()> {
    if !(prof.tau >= 0.0 && prof.tau.is_finite()) {
        return Err(Error::Domain(format!("elapsed follow-up {} must be finite and nonnegative", prof.tau)));
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("horizon {dt} must be finite and nonnegative")));
    }
    Ok(())
}

fn clamp_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else if (-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::ProbabilityOutOfRange { value: p })
    }
}

/// `P(T ≤ τ + dt | T > τ, z)` ignoring dropout: `1 - S(τ + dt) / S(τ)`.
pub fn pi_no_dropout(event: &SurvivalModel, prof: &AtRiskProfile, dt: f64) -> Result<f64> {
    check_inputs(prof, dt)?;
    let cond = event.at(&prof.z)?;
    no_dropout(&cond, prof.tau, dt)
}

fn no_dropout(cond: &Conditional<'_>, tau: f64, dt: f64) -> Result<f64> {
    let ln_s_tau = cond.ln_survival(tau);
    if ln_s_tau < MIN_AT_RISK.ln() {
        return Err(Error::AtRiskUnderflow { tau });
    }
    if dt == 0.0 {
        return Ok(0.0);
    }
    clamp_probability(-(cond.ln_survival(tau + dt) - ln_s_tau).exp_m1())
}

/// Closed form for exponential event (rate `lambda_z`) and dropout (rate
/// `psi`) times: `λ (1 - e^{-(λ + ψ) dt}) / (λ + ψ)`.
pub fn pi_exponential_closed(lambda_z: f64, psi: f64, dt: f64) -> Result<f64> {
    if !(lambda_z > 0.0 && lambda_z.is_finite()) || !(psi >= 0.0 && psi.is_finite()) || !(dt >= 0.0) {
        return Err(Error::Domain(format!(
            "need lambda > 0, psi >= 0, dt >= 0 (got {lambda_z}, {psi}, {dt})"
        )));
    }
    let total = lambda_z + psi;
    Ok(-lambda_z * (-total * dt).exp_m1() / total)
}

/// Probability of an event in `(τ, τ + dt]` for a subject event-free and
/// under follow-up at `τ`:
/// `∫_τ^{τ+dt} (1 - G(u)) f(u | z) du / ([1 - F(τ | z)] [1 - G(τ)])`.
///
/// The integrand is evaluated relative to the denominator in log space so
/// that long follow-ups with tiny survival keep full relative precision.
pub fn pi_general(event: &SurvivalModel, dropout: &DropoutModel, prof: &AtRiskProfile, dt: f64) -> Result<f64> {
    check_inputs(prof, dt)?;
    let cond = event.at(&prof.z)?;
    general(&cond, dropout, prof.tau, dt)
}

fn general(cond: &Conditional<'_>, dropout: &DropoutModel, tau: f64, dt: f64) -> Result<f64> {
    if dropout.is_no_dropout() {
        return no_dropout(cond, tau, dt);
    }
    let ln_s_tau = cond.ln_survival(tau);
    let ln_g_tau = dropout.ln_survival(tau);
    if ln_s_tau + ln_g_tau < MIN_AT_RISK.ln() {
        return Err(Error::AtRiskUnderflow { tau });
    }
    if dt == 0.0 {
        return Ok(0.0);
    }
    let integrand = |u: f64| (dropout.ln_survival(u) - ln_g_tau + cond.ln_pdf(u) - ln_s_tau).exp();

    let mut start = tau;
    let mut sliver = 0.0;
    if cond.ln_pdf(tau) == f64::INFINITY {
        // density singular at the left end: take the excised piece from the
        // closed-form increment of F, weighted by dropout survival mid-sliver
        let w = SLIVER.min(dt);
        start = tau + w;
        let increment = -(cond.ln_survival(start) - ln_s_tau).exp_m1();
        sliver = increment * (dropout.ln_survival(tau + 0.5 * w) - ln_g_tau).exp();
    }
    let r = integrate(integrand, start, tau + dt, QuadOptions::default());
    if !r.converged {
        log::warn!(
            "event-probability quadrature on [{tau}, {}] stopped with error estimate {:e}",
            tau + dt,
            r.error
        );
    }
    clamp_probability(sliver + r.value)
}

/// Event rate of an exponential PH model at linear predictor `eta`.
fn exponential_rate(model: &SurvivalModel, eta: f64) -> Option<f64> {
    match (model.baseline(), model.link()) {
        (Baseline::Exponential { rate }, LinkScale::ProportionalHazards) => Some(rate * eta.exp()),
        _ => None,
    }
}

/// `π_j` for every at-risk subject of `data`, in dataset order. Uses the
/// no-dropout or exponential closed forms when the models allow, quadrature
/// otherwise.
pub fn pi_vector(
    event: &SurvivalModel,
    dropout: &DropoutModel,
    data: &InterimDataset,
    dt: f64,
) -> Result<ConditionalProbabilityVector> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("horizon {dt} must be finite and nonnegative")));
    }
    let psi = dropout.model().and_then(|m| exponential_rate(m, 0.0));
    let mut ids = Vec::new();
    let mut pi = Vec::new();
    for s in data.at_risk() {
        let tau = data.elapsed(s);
        let p = (|| {
            let cond = event.at(&s.z)?;
            if dropout.is_no_dropout() {
                return no_dropout(&cond, tau, dt);
            }
            match (exponential_rate(event, cond.linear_predictor()), psi) {
                (Some(lambda), Some(psi)) => {
                    if cond.ln_survival(tau) + dropout.ln_survival(tau) < MIN_AT_RISK.ln() {
                        return Err(Error::AtRiskUnderflow { tau });
                    }
                    pi_exponential_closed(lambda, psi, dt)
                }
                _ => general(&cond, dropout, tau, dt),
            }
        })()
        .map_err(|e| Error::for_subject(&s.id, e))?;
        ids.push(s.id.clone());
        pi.push(p);
    }
    Ok(ConditionalProbabilityVector { ids, pi, horizon: dt })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_model(rate: f64) -> SurvivalModel {
        SurvivalModel::baseline_only(Baseline::Exponential { rate }, LinkScale::ProportionalHazards).unwrap()
    }

    #[test]
    fn closed_form_special_values() {
        assert!((pi_exponential_closed(1.0, 0.0, 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!((pi_exponential_closed(1.0, 1.0, 1e3).unwrap() - 0.5).abs() < 1e-15);
        assert!(pi_exponential_closed(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn empty_window() {
        let prof = AtRiskProfile { tau: 0.7, z: vec![] };
        let d = DropoutModel::parametric(Baseline::Exponential { rate: 0.4 }).unwrap();
        assert_eq!(pi_general(&exp_model(1.0), &d, &prof, 0.0).unwrap(), 0.0);
        assert_eq!(pi_no_dropout(&exp_model(1.0), &prof, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn singular_density_at_origin() {
        let m = SurvivalModel::baseline_only(Baseline::Weibull { shape: 0.4, scale: 1.3 }, LinkScale::ProportionalHazards)
            .unwrap();
        let d = DropoutModel::parametric(Baseline::Exponential { rate: 1e-9 }).unwrap();
        let prof = AtRiskProfile { tau: 0.0, z: vec![] };
        let with = pi_general(&m, &d, &prof, 0.5).unwrap();
        let without = pi_no_dropout(&m, &prof, 0.5).unwrap();
        assert!((with - without).abs() < 1e-8, "{with} {without}");
    }

    #[test]
    fn underflow_is_reported() {
        let prof = AtRiskProfile { tau: 800.0, z: vec![] };
        let err = pi_no_dropout(&exp_model(1.0), &prof, 1.0).unwrap_err();
        assert!(matches!(err, Error::AtRiskUnderflow { .. }));
    }

    #[test]
    fn clamp_policy() {
        assert_eq!(clamp_probability(1.0 + 1e-12).unwrap(), 1.0);
        assert_eq!(clamp_probability(-1e-12).unwrap(), 0.0);
        assert!(clamp_probability(1.0 + 1e-6).is_err());
    }
}
