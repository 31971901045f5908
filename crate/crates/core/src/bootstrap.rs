//! Conditional parametric bootstrap of the predictive distribution of the
//! number of additional events, and equal-tail prediction intervals.
//!
//! Each replicate keeps every indicator, entry date and covariate of the
//! observed data and redraws only the observed event and dropout times from
//! the fitted distributions truncated to the follow-up available at the
//! interim. The models are refitted, the event probabilities of the at-risk
//! subjects recomputed, and the Poisson-binomial CMFs averaged.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{InterimDataset, Outcome, SubjectRecord};
use crate::error::{Error, Result};
use crate::fit::{
    fit_dropout_model_with, fit_event_model_with, DropoutModel, FitOptions, FittedModels, ModelSpec,
};
use crate::numeric::ln_one_minus_exp;
use crate::poibin::{quantile_from_cmf, PoiBin, PoiBinMethod};
use crate::probability::pi_vector;
use crate::rng::{open_unit, stream_rng};
use crate::survival::{Family, SurvivalModel};

/// Largest tolerated share of dropped replicates.
pub const MAX_DROP_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of replicates `B`.
    pub replicates: usize,
    /// Two-sided level: intervals have nominal coverage `1 - alpha`.
    pub alpha: f64,
    pub master_seed: u64,
    /// Fresh resamples tried after a failed refit before dropping a replicate.
    pub max_refit_retries: usize,
    pub poibin_method: PoiBinMethod,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Start replicate refits from the observed-data estimates.
    pub warm_start: bool,
    /// Optimiser settings for the replicate refits.
    #[serde(skip)]
    pub fit_options: FitOptions,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, alpha: f64, master_seed: u64) -> Result<Self> {
        let cfg = BootstrapConfig {
            replicates,
            alpha,
            master_seed,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("at least one bootstrap replicate is required".into()));
        }
        check_alpha(self.alpha)?;
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 500,
            alpha: 0.05,
            master_seed: 0,
            max_refit_retries: 3,
            poibin_method: PoiBinMethod::Auto,
            threads: None,
            warm_start: true,
            fit_options: FitOptions::default(),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Bootstrap average of the conditional CMF of `Y` on `{0..m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCmf {
    pub horizon: f64,
    pub cmf: Vec<f64>,
    pub replicates_used: usize,
    pub replicates_dropped: usize,
}

impl BootstrapCmf {
    /// Number of at-risk subjects `m`.
    pub fn m_at_risk(&self) -> usize {
        self.cmf.len() - 1
    }

    /// `E[Y] = Σ_{y<m} (1 - F(y))`.
    pub fn mean(&self) -> f64 {
        self.cmf[..self.m_at_risk()].iter().map(|f| 1.0 - f).sum()
    }

    pub fn quantile(&self, q: f64) -> Result<usize> {
        quantile_from_cmf(&self.cmf, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: usize,
    pub upper: usize,
    pub alpha: f64,
    pub horizon: f64,
    pub m_at_risk: usize,
}

impl PredictionInterval {
    pub fn contains(&self, y: usize) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn width(&self) -> usize {
        self.upper - self.lower
    }
}

/// Equal-tail interval `[q(α/2), q(1-α/2)]` with `q(p) = min{y : F(y) ≥ p}`.
pub fn prediction_interval(cmf: &BootstrapCmf, alpha: f64) -> Result<PredictionInterval> {
    interval_from_cmf(&cmf.cmf, alpha, cmf.horizon)
}

pub fn interval_from_cmf(cmf: &[f64], alpha: f64, horizon: f64) -> Result<PredictionInterval> {
    check_alpha(alpha)?;
    Ok(PredictionInterval {
        lower: quantile_from_cmf(cmf, alpha / 2.0)?,
        upper: quantile_from_cmf(cmf, 1.0 - alpha / 2.0)?,
        alpha,
        horizon,
        m_at_risk: cmf.len() - 1,
    })
}

/// `F^{-1}(u F(τ | z))`: a draw from the conditional distribution truncated to
/// `(0, τ]` given a uniform deviate `u`. The target is formed on the link
/// scale, `g(1 - u F(τ | z)) - βᵀz`, and mapped through the baseline inverse,
/// so no conditional inverse is needed for any link.
pub fn sample_truncated(model: &SurvivalModel, z: &[f64], tau: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("uniform deviate {u} outside (0, 1)")));
    }
    if !(tau > 0.0) {
        return Err(Error::DegenerateTruncation { tau });
    }
    let cond = model.at(z)?;
    let ln_f_tau = cond.ln_cdf(tau);
    if ln_f_tau == f64::NEG_INFINITY {
        return Err(Error::DegenerateTruncation { tau });
    }
    let ln_f = u.ln() + ln_f_tau;
    let t = cond.quantile_from_logs(ln_one_minus_exp(ln_f), ln_f);
    if t.is_nan() {
        return Err(Error::DegenerateTruncation { tau });
    }
    Ok(t.clamp(f64::MIN_POSITIVE, tau))
}

/// Replicate dataset: event and dropout times redrawn from the truncated
/// fitted distributions, everything else copied.
pub fn resample_dataset(
    data: &InterimDataset,
    event: &SurvivalModel,
    dropout: &DropoutModel,
    seed: u64,
) -> Result<InterimDataset> {
    resample_with(data, event, dropout, &mut stream_rng(seed, 0))
}

fn resample_with(
    data: &InterimDataset,
    event: &SurvivalModel,
    dropout: &DropoutModel,
    rng: &mut impl Rng,
) -> Result<InterimDataset> {
    let subjects = data
        .subjects()
        .iter()
        .map(|s| {
            let tau = data.elapsed(s);
            let t_obs = match s.outcome {
                Outcome::AdminCensored => return Ok(s.clone()),
                Outcome::Event => sample_truncated(event, &s.z, tau, open_unit(rng)),
                Outcome::Dropout => match dropout.model() {
                    Some(m) => sample_truncated(m, &[], tau, open_unit(rng)),
                    None => Err(Error::InvalidModel("dropout observed but the dropout model is empty".into())),
                },
            }
            .map_err(|e| Error::for_subject(&s.id, e))?;
            Ok(SubjectRecord { t_obs, ..s.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(data.with_subjects(subjects))
}

/// Models refitted to one bootstrap replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub event: SurvivalModel,
    pub dropout: DropoutModel,
    /// Resamples discarded because a refit failed.
    pub retries: usize,
}

/// Resamples and refits replicate `b`; `None` when every attempt failed.
/// Deterministic in `(data, fits, cfg.master_seed, b)`.
pub fn replicate_fit(
    data: &InterimDataset,
    fits: &FittedModels,
    cfg: &BootstrapConfig,
    b: usize,
) -> Result<Option<ReplicateFit>> {
    let mut rng = stream_rng(cfg.master_seed, b as u64);
    let opts = &cfg.fit_options;
    let event_spec = fits.event_spec();
    let dropout_model = &fits.dropout.model;
    let dropout_family: Option<Family> = dropout_model.model().map(SurvivalModel::family);
    for attempt in 0..=cfg.max_refit_retries {
        // resampling errors are structural (zero truncation mass), not bad luck
        let rep = resample_with(data, &fits.event.model, dropout_model, &mut rng)?;
        let event_start = cfg.warm_start.then_some(&fits.event.model);
        let event = match fit_event_model_with(&rep, event_spec, event_start, opts) {
            Ok(f) if f.converged => f.model,
            Ok(_) | Err(_) => {
                log::debug!("replicate {b}: event refit failed on attempt {attempt}");
                continue;
            }
        };
        let dropout = match dropout_family {
            None => DropoutModel::NoDropout,
            Some(family) => {
                let start = if cfg.warm_start { dropout_model.model() } else { None };
                match fit_dropout_model_with(&rep, family, start, opts) {
                    Ok(f) if f.converged => f.model,
                    Ok(_) | Err(_) => {
                        log::debug!("replicate {b}: dropout refit failed on attempt {attempt}");
                        continue;
                    }
                }
            }
        };
        return Ok(Some(ReplicateFit {
            event,
            dropout,
            retries: attempt,
        }));
    }
    Ok(None)
}

fn thread_pool(threads: Option<usize>) -> Result<Option<rayon::ThreadPool>> {
    threads
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))
        })
        .transpose()
}

/// Bootstrap CMFs for several horizons sharing the same replicate fits.
pub fn bootstrap_cmfs(
    data: &InterimDataset,
    fits: &FittedModels,
    horizons: &[f64],
    cfg: &BootstrapConfig,
) -> Result<Vec<BootstrapCmf>> {
    cfg.validate()?;
    let m = data.at_risk().count();
    let run = || -> Vec<Result<Option<Vec<Vec<f64>>>>> {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|b| {
                let Some(rep) = replicate_fit(data, fits, cfg, b)? else {
                    return Ok(None);
                };
                horizons
                    .iter()
                    .map(|&dt| {
                        let pi = pi_vector(&rep.event, &rep.dropout, data, dt)?;
                        Ok(PoiBin::new(pi.pi, cfg.poibin_method)?.cmf_values().to_vec())
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
                    .or_else(|e| {
                        log::debug!("replicate {b}: event probabilities failed: {e}");
                        Ok(None)
                    })
            })
            .collect()
    };
    let results = match thread_pool(cfg.threads)? {
        Some(pool) => pool.install(run),
        None => run(),
    };

    // reduce in replicate order so the average does not depend on scheduling
    let mut sums = vec![vec![0.0; m + 1]; horizons.len()];
    let mut used = 0usize;
    for r in results {
        if let Some(cmfs) = r? {
            used += 1;
            for (acc, cmf) in sums.iter_mut().zip(cmfs) {
                acc.iter_mut().zip(cmf).for_each(|(a, c)| *a += c);
            }
        }
    }
    let dropped = cfg.replicates - used;
    if used == 0 || dropped as f64 > MAX_DROP_FRACTION * cfg.replicates as f64 {
        return Err(Error::Bootstrap {
            dropped,
            requested: cfg.replicates,
        });
    }
    if dropped > 0 {
        log::warn!("{dropped} of {} bootstrap replicates dropped after failed refits", cfg.replicates);
    }
    Ok(sums
        .into_iter()
        .zip(horizons)
        .map(|(acc, &dt)| BootstrapCmf {
            horizon: dt,
            cmf: acc.into_iter().map(|s| s / used as f64).collect(),
            replicates_used: used,
            replicates_dropped: dropped,
        })
        .collect())
}

/// Fits the event and dropout models to `data` and bootstraps the CMF at one
/// horizon.
pub fn bootstrap_cmf(
    data: &InterimDataset,
    event_spec: ModelSpec,
    dropout_family: Family,
    dt: f64,
    cfg: &BootstrapConfig,
) -> Result<BootstrapCmf> {
    let fits = FittedModels::fit(data, event_spec, dropout_family, &FitOptions::default())?;
    Ok(bootstrap_cmfs(data, &fits, &[dt], cfg)?.remove(0))
}

/// CMF of `Y` with the given models plugged in, no bootstrap.
pub fn plugin_cmf(
    data: &InterimDataset,
    event: &SurvivalModel,
    dropout: &DropoutModel,
    dt: f64,
    method: PoiBinMethod,
) -> Result<Vec<f64>> {
    let pi = pi_vector(event, dropout, data, dt)?;
    Ok(PoiBin::new(pi.pi, method)?.cmf_values().to_vec())
}

/// Plug-in (estimative) interval from a single CMF at the fitted models.
pub fn plugin_interval(
    data: &InterimDataset,
    event: &SurvivalModel,
    dropout: &DropoutModel,
    dt: f64,
    alpha: f64,
) -> Result<PredictionInterval> {
    let cmf = plugin_cmf(data, event, dropout, dt, PoiBinMethod::Auto)?;
    interval_from_cmf(&cmf, alpha, dt)
}
