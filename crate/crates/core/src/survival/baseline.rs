//! Baseline (covariate-free) distributions and their link-scale representation.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use std::fmt;
use std::str::FromStr;

use super::link::LinkScale;
use super::spline::SplineKnots;
use crate::error::{Error, Result};
use crate::numeric::quadrature::{integrate, QuadOptions};
use crate::numeric::roots::solve_increasing;
use crate::numeric::{ln_one_minus_exp, norm_ln_cdf, norm_ln_pdf};

/// Below this magnitude the generalized gamma shape is treated as the
/// log-normal limit.
const GG_LOGNORMAL_Q: f64 = 1e-8;

/// Above this gamma shape (`1/q^2`) tail probabilities come from quadrature.
const GG_QUADRATURE_SHAPE: f64 = 1000.0;

/// Distribution family tag, as requested when fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Exponential,
    Weibull,
    LogNormal,
    LogLogistic,
    GeneralizedGamma,
    /// Restricted-cubic-spline model with the given number of internal knots.
    RoystonParmar { knots: usize },
}

impl Family {
    /// Number of baseline parameters.
    pub fn baseline_dim(self) -> usize {
        match self {
            Family::Exponential => 1,
            Family::Weibull | Family::LogNormal | Family::LogLogistic => 2,
            Family::GeneralizedGamma => 3,
            Family::RoystonParmar { knots } => knots + 2,
        }
    }

    pub fn knot_count(self) -> usize {
        match self {
            Family::RoystonParmar { knots } => knots,
            _ => 0,
        }
    }

    /// The link scale on which the family is conventionally parameterised.
    pub fn natural_link(self) -> LinkScale {
        match self {
            Family::LogLogistic => LinkScale::ProportionalOdds,
            Family::LogNormal => LinkScale::LinearProbit,
            _ => LinkScale::ProportionalHazards,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Exponential => f.write_str("exponential"),
            Family::Weibull => f.write_str("weibull"),
            Family::LogNormal => f.write_str("lognormal"),
            Family::LogLogistic => f.write_str("loglogistic"),
            Family::GeneralizedGamma => f.write_str("gengamma"),
            Family::RoystonParmar { knots } => write!(f, "rp{knots}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "exponential" | "exp" => Family::Exponential,
            "weibull" => Family::Weibull,
            "lognormal" | "lnorm" => Family::LogNormal,
            "loglogistic" | "llogis" => Family::LogLogistic,
            "gengamma" | "generalized-gamma" | "generalizedgamma" => Family::GeneralizedGamma,
            other => match other.strip_prefix("rp") {
                Some(k) => Family::RoystonParmar {
                    knots: k
                        .parse()
                        .map_err(|_| Error::Config(format!("bad knot count in family `{s}`")))?,
                },
                None => return Err(Error::Config(format!("unknown distribution family `{s}`"))),
            },
        })
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

/// Baseline distribution with its parameters on the natural scale.
///
/// Parameterisations:
/// - `Exponential`: `S0(t) = exp(-rate t)`
/// - `Weibull`: `S0(t) = exp(-scale t^shape)`
/// - `LogNormal`: `log T ~ N(meanlog, sdlog²)`
/// - `LogLogistic`: `F0(t) = 1 / (1 + (t / scale)^-shape)`
/// - `GeneralizedGamma`: location `mu`, scale `sigma`, shape `q` (Prentice);
///   `q = 1` is the Weibull with shape `1/sigma` and scale `exp(-mu/sigma)`,
///   `q -> 0` is the log-normal with `meanlog = mu`, `sdlog = sigma`.
/// - `RoystonParmar`: `g(S0(t)) = s(log t)`, a restricted cubic spline whose
///   meaning depends on the link scale of the enclosing model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Baseline {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    LogLogistic { shape: f64, scale: f64 },
    GeneralizedGamma { mu: f64, sigma: f64, q: f64 },
    RoystonParmar { knots: SplineKnots, coefficients: Vec<f64> },
}

/// Link-scale value of the baseline at a time point together with the log of
/// its time derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinkPoint {
    pub value: f64,
    pub ln_slope: f64,
}

impl Baseline {
    pub fn family(&self) -> Family {
        match self {
            Baseline::Exponential { .. } => Family::Exponential,
            Baseline::Weibull { .. } => Family::Weibull,
            Baseline::LogNormal { .. } => Family::LogNormal,
            Baseline::LogLogistic { .. } => Family::LogLogistic,
            Baseline::GeneralizedGamma { .. } => Family::GeneralizedGamma,
            Baseline::RoystonParmar { knots, .. } => Family::RoystonParmar {
                knots: knots.knot_count(),
            },
        }
    }

    pub fn parameters(&self) -> Vec<f64> {
        match self {
            Baseline::Exponential { rate } => vec![*rate],
            Baseline::Weibull { shape, scale } | Baseline::LogLogistic { shape, scale } => vec![*shape, *scale],
            Baseline::LogNormal { meanlog, sdlog } => vec![*meanlog, *sdlog],
            Baseline::GeneralizedGamma { mu, sigma, q } => vec![*mu, *sigma, *q],
            Baseline::RoystonParmar { coefficients, .. } => coefficients.clone(),
        }
    }

    pub fn knots(&self) -> Option<&SplineKnots> {
        match self {
            Baseline::RoystonParmar { knots, .. } => Some(knots),
            _ => None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let params = self.parameters();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite parameters {params:?}")));
        }
        let positive = match self {
            Baseline::Exponential { rate } => vec![*rate],
            Baseline::Weibull { shape, scale } | Baseline::LogLogistic { shape, scale } => vec![*shape, *scale],
            Baseline::LogNormal { sdlog, .. } => vec![*sdlog],
            Baseline::GeneralizedGamma { sigma, .. } => vec![*sigma],
            Baseline::RoystonParmar { knots, coefficients } => {
                if coefficients.len() != knots.dim() {
                    return Err(Error::InvalidModel(format!(
                        "spline with {} knots needs {} coefficients, got {}",
                        knots.knot_count(),
                        knots.dim(),
                        coefficients.len()
                    )));
                }
                vec![]
            }
        };
        if positive.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidModel(format!("non-positive shape/scale in {params:?}")));
        }
        Ok(())
    }

    /// Unconstrained coordinates used by the optimiser (positive parameters on
    /// the log scale).
    pub fn to_unconstrained(&self) -> Vec<f64> {
        match self {
            Baseline::Exponential { rate } => vec![rate.ln()],
            Baseline::Weibull { shape, scale } | Baseline::LogLogistic { shape, scale } => {
                vec![shape.ln(), scale.ln()]
            }
            Baseline::LogNormal { meanlog, sdlog } => vec![*meanlog, sdlog.ln()],
            Baseline::GeneralizedGamma { mu, sigma, q } => vec![*mu, sigma.ln(), *q],
            Baseline::RoystonParmar { coefficients, .. } => coefficients.clone(),
        }
    }

    pub fn from_unconstrained(family: Family, knots: Option<&SplineKnots>, theta: &[f64]) -> Result<Self> {
        if theta.len() != family.baseline_dim() {
            return Err(Error::InvalidModel(format!(
                "{family} expects {} baseline parameters, got {}",
                family.baseline_dim(),
                theta.len()
            )));
        }
        let b = match family {
            Family::Exponential => Baseline::Exponential { rate: theta[0].exp() },
            Family::Weibull => Baseline::Weibull {
                shape: theta[0].exp(),
                scale: theta[1].exp(),
            },
            Family::LogLogistic => Baseline::LogLogistic {
                shape: theta[0].exp(),
                scale: theta[1].exp(),
            },
            Family::LogNormal => Baseline::LogNormal {
                meanlog: theta[0],
                sdlog: theta[1].exp(),
            },
            Family::GeneralizedGamma => Baseline::GeneralizedGamma {
                mu: theta[0],
                sigma: theta[1].exp(),
                q: theta[2],
            },
            Family::RoystonParmar { .. } => Baseline::RoystonParmar {
                knots: knots
                    .cloned()
                    .ok_or_else(|| Error::InvalidModel("spline family requires knots".into()))?,
                coefficients: theta.to_vec(),
            },
        };
        b.validate()?;
        Ok(b)
    }

    /// `(a, b)` with `g(S0(t)) = a + b log t` when the family is log-linear on
    /// this link scale.
    pub(crate) fn linear_form(&self, link: LinkScale) -> Option<(f64, f64)> {
        match (self, link) {
            (Baseline::Exponential { rate }, LinkScale::ProportionalHazards) => Some((rate.ln(), 1.0)),
            (Baseline::Weibull { shape, scale }, LinkScale::ProportionalHazards) => Some((scale.ln(), *shape)),
            (Baseline::LogLogistic { shape, scale }, LinkScale::ProportionalOdds) => {
                Some((-shape * scale.ln(), *shape))
            }
            (Baseline::LogNormal { meanlog, sdlog }, LinkScale::LinearProbit) => Some((-meanlog / sdlog, 1.0 / sdlog)),
            _ => None,
        }
    }

    /// `(ln S0, ln F0, ln f0)` for the parametric families at `t > 0`.
    fn ln_parts(&self, t: f64, lt: f64) -> (f64, f64, f64) {
        match self {
            Baseline::Exponential { rate } => {
                let h = rate * t;
                (-h, ln_one_minus_exp(-h), rate.ln() - h)
            }
            Baseline::Weibull { shape, scale } => {
                let h = scale * (shape * lt).exp();
                (-h, ln_one_minus_exp(-h), scale.ln() + shape.ln() + (shape - 1.0) * lt - h)
            }
            Baseline::LogNormal { meanlog, sdlog } => {
                let w = (lt - meanlog) / sdlog;
                (norm_ln_cdf(-w), norm_ln_cdf(w), norm_ln_pdf(w) - sdlog.ln() - lt)
            }
            Baseline::LogLogistic { shape, scale } => {
                let v = shape * (lt - scale.ln());
                let ln_s = -crate::numeric::softplus(v);
                let ln_f = -crate::numeric::softplus(-v);
                (ln_s, ln_f, shape.ln() - lt + ln_s + ln_f)
            }
            Baseline::GeneralizedGamma { mu, sigma, q } => gengamma_ln_parts(*mu, *sigma, *q, lt),
            Baseline::RoystonParmar { .. } => unreachable!("spline baselines live on the link scale"),
        }
    }

    pub(crate) fn link_point(&self, link: LinkScale, t: f64) -> LinkPoint {
        self.link_point_at(link, t, t.ln())
    }

    /// As [`Baseline::link_point`] with `lt = ln t` supplied by the caller.
    pub(crate) fn link_point_at(&self, link: LinkScale, t: f64, lt: f64) -> LinkPoint {
        if let Baseline::RoystonParmar { knots, coefficients } = self {
            let (s, ds) = knots.evaluate(coefficients, lt);
            return LinkPoint {
                value: s,
                ln_slope: if ds > 0.0 { ds.ln() - lt } else { f64::NAN },
            };
        }
        if let Some((a, b)) = self.linear_form(link) {
            return LinkPoint {
                value: a + b * lt,
                ln_slope: b.ln() - lt,
            };
        }
        let (ln_s, ln_f, ln_f0) = self.ln_parts(t, lt);
        let value = link.value(ln_s, ln_f);
        LinkPoint {
            value,
            ln_slope: ln_f0 - link.ln_dcdf(value),
        }
    }

    /// Time at which the baseline reaches link value `v`.
    pub(crate) fn time_at_link_value(&self, link: LinkScale, v: f64) -> f64 {
        if let Some((a, b)) = self.linear_form(link) {
            return ((v - a) / b).exp();
        }
        let ln_s = link.ln_survival(v);
        let ln_f = link.ln_cdf(v);
        match self {
            Baseline::Exponential { rate } => -ln_s / rate,
            Baseline::Weibull { shape, scale } => (-ln_s / scale).powf(1.0 / shape),
            Baseline::LogLogistic { shape, scale } => scale * ((ln_f - ln_s) / shape).exp(),
            Baseline::LogNormal { meanlog, sdlog } => {
                let z = LinkScale::LinearProbit.value(ln_s, ln_f);
                (meanlog + sdlog * z).exp()
            }
            Baseline::GeneralizedGamma { mu, sigma, q } => {
                if q.abs() < GG_LOGNORMAL_Q {
                    let z = LinkScale::LinearProbit.value(ln_s, ln_f);
                    return (mu + sigma * z).exp();
                }
                // Root in the standardised log time w; compare in the smaller tail.
                let lower_tail = ln_f < ln_s;
                let target = if lower_tail { ln_f } else { ln_s };
                let f = |w: f64| {
                    let (s, fl, _) = gengamma_ln_parts(*mu, *sigma, *q, mu + sigma * w);
                    if lower_tail {
                        fl - target
                    } else {
                        target - s
                    }
                };
                let start = LinkScale::LinearProbit.value(ln_s, ln_f);
                let w = solve_increasing(f, start - 1.0, start + 1.0, 1e-13).unwrap_or(f64::NAN);
                (mu + sigma * w).exp()
            }
            Baseline::RoystonParmar { knots, coefficients } => {
                let f = |x: f64| knots.evaluate(coefficients, x).0 - v;
                let x = solve_increasing(f, knots.lower() - 10.0, knots.upper() + 10.0, 1e-13).unwrap_or(f64::NAN);
                x.exp()
            }
        }
    }
}

/// `ln(a^a / Γ(a))` arranged so that the `a` terms cancel analytically:
/// returns `ln Γ(a) - [(a - ½) ln a - a + ½ ln 2π]`.
fn stirling_remainder(a: f64) -> f64 {
    if a > 50.0 {
        // truncation error below 1/(1188 a^9)
        let inv = 1.0 / a;
        let inv2 = inv * inv;
        inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
    } else {
        ln_gamma(a) - ((a - 0.5) * a.ln() - a + 0.5 * (2.0 * std::f64::consts::PI).ln())
    }
}

/// `e^y - 1 - y`, accurate for small `y`.
fn expm1_minus_linear(y: f64) -> f64 {
    if y.abs() < 1e-2 {
        let y2 = y * y;
        y2 * (0.5 + y * (1.0 / 6.0 + y * (1.0 / 24.0 + y * (1.0 / 120.0 + y / 720.0))))
    } else {
        y.exp_m1() - y
    }
}

fn gengamma_ln_parts(mu: f64, sigma: f64, q: f64, lt: f64) -> (f64, f64, f64) {
    let w = (lt - mu) / sigma;
    if q.abs() < GG_LOGNORMAL_Q {
        return (norm_ln_cdf(-w), norm_ln_cdf(w), norm_ln_pdf(w) - sigma.ln() - lt);
    }
    let a = 1.0 / (q * q);
    let qw = q * w;
    // Density of w. |q| a^(1/2) = 1, so ln|q| + a ln a - ln Γ(a) + a (qw - e^{qw}) collapses to:
    let ln_density = |v: f64| {
        -0.5 * (2.0 * std::f64::consts::PI).ln() - stirling_remainder(a) - a * expm1_minus_linear(q * v)
    };
    let ln_pdf = ln_density(w) - sigma.ln() - lt;
    let (ln_s, ln_f) = if a > GG_QUADRATURE_SHAPE {
        gengamma_tails_by_quadrature(w, ln_density)
    } else {
        let u = a * qw.exp();
        let (lower, upper) = (gamma_lr(a, u), gamma_ur(a, u));
        if q > 0.0 {
            (upper.ln(), lower.ln())
        } else {
            (lower.ln(), upper.ln())
        }
    };
    (ln_s, ln_f, ln_pdf)
}

/// `(ln S, ln F)` at standardized point `w`, integrating the smaller tail of the
/// w-density in log space. Used where the series/continued-fraction incomplete
/// gamma loses digits (very large shape).
fn gengamma_tails_by_quadrature(w: f64, ln_density: impl Fn(f64) -> f64) -> (f64, f64) {
    let anchor = ln_density(w);
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_subdivisions: 500,
    };
    let span = 40.0;
    let (lo, hi) = if w <= 0.0 { (w - span, w) } else { (w, w + span) };
    let r = integrate(|v| (ln_density(v) - anchor).exp(), lo, hi, opts);
    let ln_tail = anchor + r.value.ln();
    let ln_other = ln_one_minus_exp(ln_tail);
    if w <= 0.0 {
        (ln_other, ln_tail)
    } else {
        (ln_tail, ln_other)
    }
}
