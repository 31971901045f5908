use serde::{Deserialize, Serialize};

use super::baseline::{Baseline, Family};
use super::link::LinkScale;
use crate::error::{Error, Result};

/// Event-time distribution with covariate effects on a link scale:
/// `g(S(t | z)) = g(S0(t)) + βᵀz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalModel {
    baseline: Baseline,
    link: LinkScale,
    beta: Vec<f64>,
}

impl SurvivalModel {
    pub fn new(baseline: Baseline, link: LinkScale, beta: Vec<f64>) -> Result<Self> {
        baseline.validate()?;
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite coefficients {beta:?}")));
        }
        Ok(SurvivalModel { baseline, link, beta })
    }

    /// Covariate-free model.
    pub fn baseline_only(baseline: Baseline, link: LinkScale) -> Result<Self> {
        Self::new(baseline, link, Vec::new())
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn link(&self) -> LinkScale {
        self.link
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn family(&self) -> Family {
        self.baseline.family()
    }

    /// Total number of free parameters.
    pub fn n_params(&self) -> usize {
        self.family().baseline_dim() + self.beta.len()
    }

    pub fn linear_predictor(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.beta.len() {
            return Err(Error::Domain(format!(
                "covariate vector has {} entries, model has {} coefficients",
                z.len(),
                self.beta.len()
            )));
        }
        Ok(self.beta.iter().zip(z).map(|(b, x)| b * x).sum())
    }

    /// Distribution of `T` for a subject with covariates `z`.
    pub fn at(&self, z: &[f64]) -> Result<Conditional<'_>> {
        Ok(self.at_linear_predictor(self.linear_predictor(z)?))
    }

    pub fn at_linear_predictor(&self, eta: f64) -> Conditional<'_> {
        Conditional { model: self, eta }
    }

    pub fn cdf(&self, t: f64, z: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok(self.at(z)?.cdf(t))
    }

    pub fn survival(&self, t: f64, z: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok(self.at(z)?.survival(t))
    }

    pub fn pdf(&self, t: f64, z: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok(self.at(z)?.pdf(t))
    }

    pub fn hazard(&self, t: f64, z: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok(self.at(z)?.hazard(t))
    }

    pub fn cumulative_hazard(&self, t: f64, z: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok(self.at(z)?.cumulative_hazard(t))
    }

    /// Log-likelihood contribution of one right-censored observation at
    /// `t > 0` (`lt = ln t`): the log density for an event, the log survival
    /// otherwise.
    pub(crate) fn ln_contribution(&self, eta: f64, t: f64, lt: f64, event: bool) -> f64 {
        let p = self.baseline.link_point_at(self.link, t, lt);
        let v = p.value + eta;
        if !event {
            self.link.ln_survival(v)
        } else if p.ln_slope.is_nan() {
            f64::NEG_INFINITY
        } else {
            self.link.ln_dcdf(v) + p.ln_slope
        }
    }

    pub fn quantile(&self, u: f64, z: &[f64]) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        Ok(self.at(z)?.quantile(u))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time {t} must be nonnegative")))
    }
}

/// A model evaluated at a fixed linear predictor.
#[derive(Debug, Clone, Copy)]
pub struct Conditional<'a> {
    model: &'a SurvivalModel,
    eta: f64,
}

impl Conditional<'_> {
    pub fn linear_predictor(&self) -> f64 {
        self.eta
    }

    fn value(&self, t: f64) -> f64 {
        self.model.baseline.link_point(self.model.link, t).value + self.eta
    }

    pub fn ln_survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        self.model.link.ln_survival(self.value(t))
    }

    pub fn ln_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if t == f64::INFINITY {
            return 0.0;
        }
        self.model.link.ln_cdf(self.value(t))
    }

    pub fn survival(&self, t: f64) -> f64 {
        self.ln_survival(t).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return 1.0;
        }
        self.model.link.cdf(self.value(t))
    }

    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        -self.ln_survival(t)
    }

    /// Log density; `+inf` where the density diverges at the origin.
    pub fn ln_pdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.ln_pdf_at_origin();
        }
        let p = self.model.baseline.link_point(self.model.link, t);
        if p.ln_slope.is_nan() {
            return f64::NEG_INFINITY;
        }
        self.model.link.ln_dcdf(p.value + self.eta) + p.ln_slope
    }

    fn ln_pdf_at_origin(&self) -> f64 {
        match self.model.baseline {
            Baseline::Weibull { shape, .. } if shape < 1.0 => f64::INFINITY,
            Baseline::Weibull { shape, .. } if shape > 1.0 => f64::NEG_INFINITY,
            _ => self.ln_pdf(f64::MIN_POSITIVE),
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    pub fn hazard(&self, t: f64) -> f64 {
        (self.ln_pdf(t) - self.ln_survival(t)).exp()
    }

    /// Inverse CDF for `u` in (0, 1); 0 and +inf at the boundaries.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        self.quantile_from_logs((-u).ln_1p(), u.ln())
    }

    /// Inverse CDF addressed by `(ln S, ln F)` of the target probability.
    pub(crate) fn quantile_from_logs(&self, ln_s: f64, ln_f: f64) -> f64 {
        let link = self.model.link;
        let v0 = link.value(ln_s, ln_f) - self.eta;
        self.model.baseline.time_at_link_value(link, v0)
    }
}
