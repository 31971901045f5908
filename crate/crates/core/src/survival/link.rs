use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::{ln_one_minus_exp, norm_cdf, norm_ln_cdf, norm_ln_pdf, norm_quantile, softplus};

/// Scale on which covariates shift the transformed survival curve:
/// `g(S(t | z)) = g(S0(t)) + βᵀz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkScale {
    /// `g(S) = log(-log S)`, covariates act as hazard ratios.
    #[serde(rename = "ph")]
    ProportionalHazards,
    /// `g(S) = log((1 - S) / S)`, covariates act as odds ratios.
    #[serde(rename = "po")]
    ProportionalOdds,
    /// `g(S) = -Φ⁻¹(S)`, covariates shift the probit of the CDF.
    #[serde(rename = "lp")]
    LinearProbit,
}

impl LinkScale {
    pub const ALL: [LinkScale; 3] = [
        LinkScale::ProportionalHazards,
        LinkScale::ProportionalOdds,
        LinkScale::LinearProbit,
    ];

    /// Applies the link to a survival probability strictly inside (0, 1).
    pub fn transform_survival(self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "survival probability {s} maps to an infinite link value"
            )));
        }
        Ok(self.value(s.ln(), (-s).ln_1p()))
    }

    /// Link value from `ln S` and `ln F`; both are passed so that neither tail
    /// loses precision.
    pub(crate) fn value(self, ln_s: f64, ln_f: f64) -> f64 {
        match self {
            LinkScale::ProportionalHazards => (-ln_s).ln(),
            LinkScale::ProportionalOdds => ln_f - ln_s,
            LinkScale::LinearProbit => {
                if ln_f < ln_s {
                    norm_quantile(ln_f.exp())
                } else {
                    -norm_quantile(ln_s.exp())
                }
            }
        }
    }

    pub(crate) fn ln_survival(self, v: f64) -> f64 {
        match self {
            LinkScale::ProportionalHazards => -v.exp(),
            LinkScale::ProportionalOdds => -softplus(v),
            LinkScale::LinearProbit => norm_ln_cdf(-v),
        }
    }

    pub(crate) fn ln_cdf(self, v: f64) -> f64 {
        match self {
            LinkScale::ProportionalHazards => ln_one_minus_exp(-v.exp()),
            LinkScale::ProportionalOdds => -softplus(-v),
            LinkScale::LinearProbit => norm_ln_cdf(v),
        }
    }

    /// `ln dF/dv` where `F` is the CDF implied by link value `v`.
    pub(crate) fn ln_dcdf(self, v: f64) -> f64 {
        match self {
            LinkScale::ProportionalHazards => v - v.exp(),
            LinkScale::ProportionalOdds => -softplus(-v) - softplus(v),
            LinkScale::LinearProbit => norm_ln_pdf(v),
        }
    }

    /// CDF value implied by link value `v`.
    pub(crate) fn cdf(self, v: f64) -> f64 {
        match self {
            LinkScale::ProportionalHazards => -(-v.exp()).exp_m1(),
            LinkScale::ProportionalOdds => 1.0 / (1.0 + (-v).exp()),
            LinkScale::LinearProbit => norm_cdf(v),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            LinkScale::ProportionalHazards => "ph",
            LinkScale::ProportionalOdds => "po",
            LinkScale::LinearProbit => "lp",
        }
    }
}

impl fmt::Display for LinkScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LinkScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ph" | "hazard" | "proportional-hazards" => Ok(LinkScale::ProportionalHazards),
            "po" | "odds" | "proportional-odds" => Ok(LinkScale::ProportionalOdds),
            "lp" | "probit" | "normal" | "linear-probit" => Ok(LinkScale::LinearProbit),
            other => Err(Error::Config(format!("unknown link scale `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_fixed_points() {
        let ph = LinkScale::ProportionalHazards.transform_survival((-1f64).exp()).unwrap();
        assert!(ph.abs() < 1e-15);
        assert_eq!(LinkScale::ProportionalOdds.transform_survival(0.5).unwrap(), 0.0);
        assert_eq!(LinkScale::LinearProbit.transform_survival(0.5).unwrap(), 0.0);
    }

    #[test]
    fn boundary_is_an_error() {
        for link in LinkScale::ALL {
            assert!(link.transform_survival(0.0).is_err());
            assert!(link.transform_survival(1.0).is_err());
        }
    }

    #[test]
    fn strictly_increasing_in_failure_probability() {
        for link in LinkScale::ALL {
            let mut prev = f64::NEG_INFINITY;
            for i in (1..1000).rev() {
                let v = link.transform_survival(i as f64 / 1000.0).unwrap();
                assert!(v > prev, "{link} not monotone");
                prev = v;
            }
        }
    }

    #[test]
    fn closed_forms() {
        let s: f64 = 0.3;
        let po = LinkScale::ProportionalOdds.transform_survival(s).unwrap();
        assert!((po - ((1.0 - s) / s).ln()).abs() < 1e-14);
        let lp = LinkScale::LinearProbit.transform_survival(s).unwrap();
        assert!((lp + norm_quantile(s)).abs() < 1e-14);
    }

    #[test]
    fn inverse_functions_agree() {
        for link in LinkScale::ALL {
            for &v in &[-5.0, -1.0, 0.0, 0.7, 2.5] {
                let ls = link.ln_survival(v);
                let lf = link.ln_cdf(v);
                assert!((ls.exp() + lf.exp() - 1.0).abs() < 1e-14);
                assert!((link.value(ls, lf) - v).abs() < 1e-9, "{link} {v}");
                assert!((link.cdf(v) - lf.exp()).abs() < 1e-14);
                let h = 1e-5;
                let fd = (link.cdf(v + h) - link.cdf(v - h)) / (2.0 * h);
                assert!((fd - link.ln_dcdf(v).exp()).abs() < 1e-8);
            }
        }
    }
}
