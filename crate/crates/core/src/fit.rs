//! Maximum-likelihood fitting of the event-time and dropout models to
//! right-censored interim data.
//!
//! The event model treats dropouts and administrative censorings alike as
//! right-censored; the dropout model treats events and administrative
//! censorings as right-censored observations of the dropout time.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use crate::data::{InterimDataset, Outcome, SubjectRecord};
use crate::error::{Error, Result};
use crate::numeric::simplex::{minimize, SimplexOptions};
use crate::survival::{Baseline, Family, LinkScale, SplineKnots, SurvivalModel};

/// Distribution family and link scale to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub link: LinkScale,
}

impl ModelSpec {
    pub fn new(family: Family, link: LinkScale) -> Self {
        ModelSpec { family, link }
    }

    /// The family on its conventional link scale.
    pub fn natural(family: Family) -> Self {
        ModelSpec::new(family, family.natural_link())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.family, self.link)
    }
}

/// Covariate-free model of the dropout time `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum DropoutModel {
    /// No dropouts were observed; `G ≡ 0`.
    NoDropout,
    Parametric(SurvivalModel),
}

impl DropoutModel {
    pub fn parametric(baseline: Baseline) -> Result<Self> {
        let link = baseline.family().natural_link();
        Ok(DropoutModel::Parametric(SurvivalModel::baseline_only(baseline, link)?))
    }

    pub fn is_no_dropout(&self) -> bool {
        matches!(self, DropoutModel::NoDropout)
    }

    pub fn model(&self) -> Option<&SurvivalModel> {
        match self {
            DropoutModel::NoDropout => None,
            DropoutModel::Parametric(m) => Some(m),
        }
    }

    pub fn n_params(&self) -> usize {
        self.model().map_or(0, SurvivalModel::n_params)
    }

    pub fn ln_survival(&self, t: f64) -> f64 {
        self.model().map_or(0.0, |m| m.at_linear_predictor(0.0).ln_survival(t))
    }

    pub fn survival(&self, t: f64) -> f64 {
        self.ln_survival(t).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.model().map_or(0.0, |m| m.at_linear_predictor(0.0).cdf(t))
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        self.model()
            .map_or(f64::NEG_INFINITY, |m| m.at_linear_predictor(0.0).ln_pdf(t))
    }
}

/// Fitted model with its likelihood summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<M> {
    pub model: M,
    pub loglik: f64,
    /// Number of free parameters `q`.
    pub n_params: usize,
    pub aic: f64,
    pub bic: f64,
    /// Uncensored observations used for the BIC penalty.
    pub n_uncensored: usize,
    pub converged: bool,
    /// Objective evaluations spent by the optimiser.
    pub iterations: usize,
}

impl<M> FitResult<M> {
    fn new(model: M, loglik: f64, n_params: usize, n_uncensored: usize, converged: bool, iterations: usize) -> Self {
        let (aic, bic) = information_criteria(loglik, n_params, n_uncensored);
        FitResult {
            model,
            loglik,
            n_params,
            aic,
            bic,
            n_uncensored,
            converged,
            iterations,
        }
    }
}

/// `(AIC, BIC)` with `AIC = -2ℓ + 2q` and `BIC = -2ℓ + q ln n_uncensored`.
pub fn information_criteria(loglik: f64, n_params: usize, n_uncensored: usize) -> (f64, f64) {
    let q = n_params as f64;
    (-2.0 * loglik + 2.0 * q, -2.0 * loglik + q * (n_uncensored as f64).ln())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitOptions {
    pub simplex: SimplexOptions,
}

/// Event and dropout fits for one interim dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub event: FitResult<SurvivalModel>,
    pub dropout: FitResult<DropoutModel>,
}

impl FittedModels {
    pub fn fit(data: &InterimDataset, event: ModelSpec, dropout_family: Family, opts: &FitOptions) -> Result<Self> {
        Ok(FittedModels {
            event: fit_event_model_with(data, event, None, opts)?,
            dropout: fit_dropout_model_with(data, dropout_family, None, opts)?,
        })
    }

    pub fn event_spec(&self) -> ModelSpec {
        ModelSpec::new(self.event.model.family(), self.event.model.link())
    }
}

/// Right-censored observations in a canonical order, so that sums and fits do
/// not depend on the order of records in the dataset.
struct Observations {
    t: Vec<f64>,
    lt: Vec<f64>,
    event: Vec<bool>,
    /// Row-major covariates, `p` per observation.
    z: Vec<f64>,
    p: usize,
}

impl Observations {
    fn build(data: &InterimDataset, p: usize, is_event: impl Fn(&SubjectRecord) -> bool) -> Self {
        let mut rows: Vec<(f64, bool, &[f64])> = data
            .subjects()
            .iter()
            .map(|s| (s.t_obs, is_event(s), if p == 0 { &[][..] } else { &s.z[..] }))
            .collect();
        rows.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.cmp(&b.1))
                .then_with(|| a.2.iter().zip(b.2).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
        });
        Observations {
            t: rows.iter().map(|r| r.0).collect(),
            lt: rows.iter().map(|r| r.0.ln()).collect(),
            event: rows.iter().map(|r| r.1).collect(),
            z: rows.iter().flat_map(|r| r.2.iter().copied()).collect(),
            p,
        }
    }

    fn events(data: &InterimDataset) -> Self {
        Self::build(data, data.covariate_names().len(), SubjectRecord::delta)
    }

    fn dropouts(data: &InterimDataset) -> Self {
        Self::build(data, 0, SubjectRecord::epsilon)
    }

    fn len(&self) -> usize {
        self.t.len()
    }

    fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    fn eta(&self, beta: &[f64], i: usize) -> f64 {
        if self.p == 0 {
            return 0.0;
        }
        self.z[i * self.p..(i + 1) * self.p].iter().zip(beta).map(|(z, b)| z * b).sum()
    }

    fn loglik(&self, model: &SurvivalModel) -> f64 {
        let beta = model.beta();
        // Neumaier summation: near the optimum the objective is flat to within
        // a few ulps, and plain summation noise limits the attainable accuracy.
        let link = model.link();
        let linear = model.baseline().linear_form(link).map(|(a, b)| (a, b, b.ln()));
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in 0..self.len() {
            let eta = self.eta(beta, i);
            let x = match linear {
                // log-linear baselines: v = a + b ln t, with slope b / t
                Some((a, b, ln_b)) => {
                    let v = a + b * self.lt[i] + eta;
                    if self.event[i] {
                        link.ln_dcdf(v) + ln_b - self.lt[i]
                    } else {
                        link.ln_survival(v)
                    }
                }
                None => model.ln_contribution(eta, self.t[i], self.lt[i], self.event[i]),
            };
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    fn log_event_times(&self) -> Vec<f64> {
        (0..self.len()).filter(|&i| self.event[i]).map(|i| self.lt[i]).collect()
    }

    /// Nelson–Aalen cumulative hazard at each distinct event time.
    fn nelson_aalen(&self) -> Vec<(f64, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        let mut h = 0.0;
        let mut i = 0;
        while i < n {
            let t = self.t[i];
            let at_risk = (n - i) as f64;
            let mut d = 0usize;
            let mut j = i;
            while j < n && self.t[j] == t {
                d += self.event[j] as usize;
                j += 1;
            }
            if d > 0 {
                h += d as f64 / at_risk;
                out.push((t, h));
            }
            i = j;
        }
        out
    }
}

/// Log-likelihood of the event model on `data`: log density at events, log
/// survival at every other follow-up time.
pub fn loglik(model: &SurvivalModel, data: &InterimDataset) -> Result<f64> {
    check_dimension(model, data)?;
    let obs = Observations::events(data);
    let ll = obs.loglik(model);
    if ll == f64::NEG_INFINITY {
        log::warn!("event model assigns zero density to an observed event time");
    }
    Ok(ll)
}

/// Log-likelihood contribution of one subject under the event model.
pub fn subject_loglik(model: &SurvivalModel, subject: &SubjectRecord) -> Result<f64> {
    let eta = model.linear_predictor(&subject.z)?;
    Ok(model.ln_contribution(eta, subject.t_obs, subject.t_obs.ln(), subject.delta()))
}

/// Log-likelihood of the dropout model on `data`.
pub fn dropout_loglik(model: &DropoutModel, data: &InterimDataset) -> f64 {
    match model {
        DropoutModel::NoDropout => {
            if data.count(Outcome::Dropout) > 0 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        }
        DropoutModel::Parametric(m) => {
            let ll = Observations::dropouts(data).loglik(m);
            if ll == f64::NEG_INFINITY {
                log::warn!("dropout model assigns zero density to an observed dropout time");
            }
            ll
        }
    }
}

fn check_dimension(model: &SurvivalModel, data: &InterimDataset) -> Result<()> {
    let p = data.covariate_names().len();
    if model.beta().len() != p {
        return Err(Error::Domain(format!(
            "model has {} coefficients, data has {p} covariates",
            model.beta().len()
        )));
    }
    Ok(())
}

pub fn fit_event_model(data: &InterimDataset, family: Family, link: LinkScale) -> Result<FitResult<SurvivalModel>> {
    fit_event_model_with(data, ModelSpec::new(family, link), None, &FitOptions::default())
}

/// Fits the event model. `start`, when given, must have the requested family
/// and link and is used as the initial point instead of the exponential-rate
/// start; spline knots are always placed from the data being fitted.
pub fn fit_event_model_with(
    data: &InterimDataset,
    spec: ModelSpec,
    start: Option<&SurvivalModel>,
    opts: &FitOptions,
) -> Result<FitResult<SurvivalModel>> {
    let obs = Observations::events(data);
    if obs.n_events() == 0 {
        return Err(Error::InsufficientData("no events observed; the event model is not identifiable".into()));
    }
    check_rank(data)?;
    fit_observations(&obs, spec, start, opts)
}

pub fn fit_dropout_model(data: &InterimDataset, family: Family) -> Result<FitResult<DropoutModel>> {
    fit_dropout_model_with(data, family, None, &FitOptions::default())
}

/// Fits the covariate-free dropout model; returns the no-dropout sentinel when
/// the data contain no dropouts.
pub fn fit_dropout_model_with(
    data: &InterimDataset,
    family: Family,
    start: Option<&SurvivalModel>,
    opts: &FitOptions,
) -> Result<FitResult<DropoutModel>> {
    let obs = Observations::dropouts(data);
    if obs.n_events() == 0 {
        return Ok(FitResult::new(DropoutModel::NoDropout, 0.0, 0, 0, true, 0));
    }
    let fit = fit_observations(&obs, ModelSpec::natural(family), start, opts)?;
    Ok(FitResult {
        model: DropoutModel::Parametric(fit.model),
        loglik: fit.loglik,
        n_params: fit.n_params,
        aic: fit.aic,
        bic: fit.bic,
        n_uncensored: fit.n_uncensored,
        converged: fit.converged,
        iterations: fit.iterations,
    })
}

/// Full column rank of `[1, Z]`; a covariate collinear with the intercept or
/// with other covariates leaves β unidentified.
fn check_rank(data: &InterimDataset) -> Result<()> {
    let p = data.covariate_names().len();
    if p == 0 {
        return Ok(());
    }
    let n = data.len();
    let cols = p + 1;
    if n < cols {
        return Err(Error::RankDeficient { rank: n, cols });
    }
    let x = DMatrix::from_fn(n, cols, |i, j| if j == 0 { 1.0 } else { data.subjects()[i].z[j - 1] });
    let sv = x.singular_values();
    let tol = sv.max() * n.max(cols) as f64 * f64::EPSILON;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    Ok(())
}

fn fit_observations(
    obs: &Observations,
    spec: ModelSpec,
    start: Option<&SurvivalModel>,
    opts: &FitOptions,
) -> Result<FitResult<SurvivalModel>> {
    let family = spec.family;
    let knots = match family {
        Family::RoystonParmar { knots } => Some(
            SplineKnots::from_log_event_times(&obs.log_event_times(), knots)
                .map_err(|e| Error::InsufficientData(format!("cannot place spline knots: {e}")))?,
        ),
        _ => None,
    };
    let dim = family.baseline_dim();
    let p = obs.p;

    let build = |theta: &[f64]| -> Result<SurvivalModel> {
        let baseline = Baseline::from_unconstrained(family, knots.as_ref(), &theta[..dim])?;
        SurvivalModel::new(baseline, spec.link, theta[dim..].to_vec())
    };
    let objective = |theta: &[f64]| match build(theta) {
        Ok(m) => -obs.loglik(&m),
        Err(_) => f64::INFINITY,
    };

    let theta0 = match start {
        Some(m) if m.family() == family && m.link() == spec.link && m.beta().len() == p => {
            let mut th = m.baseline().to_unconstrained();
            th.extend_from_slice(m.beta());
            th
        }
        Some(m) => {
            return Err(Error::InvalidModel(format!(
                "start model {}/{} does not match requested {spec}",
                m.family(),
                m.link()
            )))
        }
        None => initial_theta(obs, spec, knots.as_ref(), &objective),
    };

    let min = minimize(objective, &theta0, &opts.simplex);
    let model = build(&min.x)?;
    let ll = -min.value;
    if !ll.is_finite() {
        return Err(Error::InsufficientData(format!("no finite likelihood found for {spec}")));
    }
    if !min.converged {
        log::warn!("{spec} fit did not converge within {} evaluations", min.evaluations);
    }
    Ok(FitResult::new(
        model,
        ll,
        dim + p,
        obs.n_events(),
        min.converged,
        min.evaluations,
    ))
}

/// Starting point built from the exponential rate `d / Σt`: unit shapes, rate
/// matched scales, zero coefficients; spline coefficients by least squares of
/// the link-transformed Nelson–Aalen curve on the basis.
fn initial_theta(
    obs: &Observations,
    spec: ModelSpec,
    knots: Option<&SplineKnots>,
    objective: &impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let rate = obs.n_events() as f64 / obs.t.iter().sum::<f64>();
    let ln_rate = rate.ln();
    let ln_median = (std::f64::consts::LN_2 / rate).ln();
    let mut theta = match spec.family {
        Family::Exponential => vec![ln_rate],
        Family::Weibull => vec![0.0, ln_rate],
        Family::LogLogistic => vec![0.0, ln_median],
        Family::LogNormal => vec![ln_median, 0.0],
        Family::GeneralizedGamma => vec![-ln_rate, 0.0, 1.0],
        Family::RoystonParmar { knots: k } => {
            let mut fallback = vec![0.0; k + 2];
            fallback[0] = ln_rate;
            fallback[1] = 1.0;
            let ls = knots.and_then(|kn| spline_least_squares(obs, spec.link, kn));
            match ls {
                Some(c) => {
                    let mut with_beta = c.clone();
                    with_beta.resize(c.len() + obs.p, 0.0);
                    if objective(&with_beta).is_finite() {
                        c
                    } else {
                        fallback
                    }
                }
                None => fallback,
            }
        }
    };
    theta.resize(spec.family.baseline_dim() + obs.p, 0.0);
    theta
}

fn spline_least_squares(obs: &Observations, link: LinkScale, knots: &SplineKnots) -> Option<Vec<f64>> {
    let rows: Vec<(Vec<f64>, f64)> = obs
        .nelson_aalen()
        .into_iter()
        .filter_map(|(t, h)| {
            let ln_s = -h;
            let ln_f = crate::numeric::ln_one_minus_exp(ln_s);
            let y = link.value(ln_s, ln_f);
            y.is_finite().then(|| (knots.basis(t.ln()), y))
        })
        .collect();
    let dim = knots.dim();
    if rows.len() < dim {
        return None;
    }
    let x = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i].0[j]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let c = x.svd(true, true).solve(&y, 1e-12).ok()?;
    c.iter().all(|v| v.is_finite()).then(|| c.iter().copied().collect())
}
