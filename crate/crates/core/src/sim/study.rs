//! Monte Carlo replicates of one scenario and their coverage metrics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::LatentTrial;
use super::{calibrate_lambda0, Lambda0Calibration, ScenarioSpec};
use crate::bootstrap::{bootstrap_cmfs, interval_from_cmf, plugin_interval, BootstrapConfig, PredictionInterval};
use crate::data::InterimDataset;
use crate::error::{Error, Result};
use crate::fit::{DropoutModel, FitOptions, FittedModels, ModelSpec};
use crate::poibin::PoiBin;
use crate::probability::{pi_vector, ConditionalProbabilityVector};
use crate::rng::stream_rng;
use crate::survival::{Baseline, Family, LinkScale, SurvivalModel};

/// Share of failed replicates above which a scenario is flagged unreliable.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Procedure whose intervals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelUnderTest {
    /// Interval at the true parameters, no estimation.
    Oracle,
    /// Plug-in interval at the fitted models.
    Plugin { event: ModelSpec },
    /// Bootstrap interval; the dropout model is exponential.
    Bootstrap { event: ModelSpec },
}

/// One simulated interim dataset with the truth behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrial {
    pub dataset: InterimDataset,
    /// Weibull-PH with `H0(t) = λ0 t^γ` and `β = ln HR`.
    pub event_model: SurvivalModel,
    pub dropout_model: DropoutModel,
    pub lambda0: f64,
    pub psi: Option<f64>,
    /// Latent event and dropout times in dataset order; dropout is infinite
    /// without a dropout mechanism.
    pub event_times: Vec<f64>,
    pub dropout_times: Vec<f64>,
    /// Event probabilities of the at-risk subjects under the true models.
    pub true_pi: ConditionalProbabilityVector,
    /// Events the at-risk subjects actually have within the horizon.
    pub realized_events: usize,
}

/// Generates replicate `replicate` of `spec` at baseline scale `lambda0`.
pub fn generate_trial(
    spec: &ScenarioSpec,
    cal: &Lambda0Calibration,
    seed: u64,
    replicate: u64,
) -> Result<GeneratedTrial> {
    generate_with(spec, cal, &mut stream_rng(seed, replicate))
}

fn generate_with(spec: &ScenarioSpec, cal: &Lambda0Calibration, rng: &mut impl Rng) -> Result<GeneratedTrial> {
    spec.validate()?;
    let design = spec.design(cal.lambda0);
    let latent = LatentTrial::draw(spec.n, cal.norta.map(|c| c.rho_star), rng);
    let (dataset, times) = design.realize(&latent)?;
    let event_model = SurvivalModel::new(
        Baseline::Weibull {
            shape: spec.shape,
            scale: cal.lambda0,
        },
        LinkScale::ProportionalHazards,
        vec![design.beta],
    )?;
    let dropout_model = match design.psi {
        Some(rate) => DropoutModel::parametric(Baseline::Exponential { rate })?,
        None => DropoutModel::NoDropout,
    };
    let true_pi = pi_vector(&event_model, &dropout_model, &dataset, spec.dt)?;
    let realized_events = times
        .iter()
        .filter(|s| s.admin < s.t.min(s.l) && s.t <= s.admin + spec.dt && s.t <= s.l)
        .count();
    Ok(GeneratedTrial {
        dataset,
        event_model,
        dropout_model,
        lambda0: cal.lambda0,
        psi: design.psi,
        event_times: times.iter().map(|s| s.t).collect(),
        dropout_times: times.iter().map(|s| s.l).collect(),
        true_pi,
        realized_events,
    })
}

/// Metrics of one replicate's interval against the true-parameter interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub replicate: usize,
    pub m_at_risk: usize,
    pub realized_events: usize,
    pub lower: usize,
    pub upper: usize,
    pub true_lower: usize,
    pub true_upper: usize,
    /// Mass of the true-parameter distribution inside `[lower, upper]`.
    pub ccp: f64,
    /// Whether the realized count fell inside the interval.
    pub covered: bool,
    /// `(L - L_true) / L_true`; absent when `L_true = 0`.
    pub rel_bias_lower: Option<f64>,
    pub rel_bias_upper: Option<f64>,
    /// `(U - L) / (U_true - L_true)`; absent for a degenerate true interval.
    pub width_ratio: Option<f64>,
}

impl MetricsRow {
    fn new(replicate: usize, trial: &GeneratedTrial, pi: &PredictionInterval, alpha: f64) -> Result<Self> {
        let truth = PoiBin::exact(trial.true_pi.pi.clone())?;
        let t = interval_from_cmf(truth.cmf_values(), alpha, trial.true_pi.horizon)?;
        let cmf = truth.cmf_values();
        let below = if pi.lower == 0 { 0.0 } else { cmf[pi.lower - 1] };
        let ratio = |est: usize, tru: usize| (tru > 0).then(|| (est as f64 - tru as f64) / tru as f64);
        Ok(MetricsRow {
            replicate,
            m_at_risk: truth.trials(),
            realized_events: trial.realized_events,
            lower: pi.lower,
            upper: pi.upper,
            true_lower: t.lower,
            true_upper: t.upper,
            ccp: (cmf[pi.upper] - below).clamp(0.0, 1.0),
            covered: pi.contains(trial.realized_events),
            rel_bias_lower: ratio(pi.lower, t.lower),
            rel_bias_upper: ratio(pi.upper, t.upper),
            width_ratio: (t.width() > 0).then(|| pi.width() as f64 / t.width() as f64),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub replicates_ok: usize,
    pub replicates_failed: usize,
    /// More than 10% of the replicates failed.
    pub unreliable: bool,
    /// Mean conditional coverage.
    pub ucp: f64,
    /// Monte Carlo standard error `sqrt(mean(ccp (1 - ccp)) / N)`.
    pub ucp_se: f64,
    /// Share of replicates whose interval covered the realized count.
    pub realized_coverage: f64,
    pub mean_rel_bias_lower: Option<f64>,
    pub mean_rel_bias_upper: Option<f64>,
    pub mean_width_ratio: Option<f64>,
    pub mean_true_lower: f64,
    pub mean_true_upper: f64,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

impl ScenarioSummary {
    fn new(rows: &[MetricsRow], failed: usize) -> Self {
        let n = rows.len();
        let nf = n.max(1) as f64;
        let total = n + failed;
        ScenarioSummary {
            replicates_ok: n,
            replicates_failed: failed,
            unreliable: failed as f64 > MAX_FAILURE_FRACTION * total as f64,
            ucp: rows.iter().map(|r| r.ccp).sum::<f64>() / nf,
            ucp_se: (rows.iter().map(|r| r.ccp * (1.0 - r.ccp)).sum::<f64>() / nf / nf).sqrt(),
            realized_coverage: rows.iter().filter(|r| r.covered).count() as f64 / nf,
            mean_rel_bias_lower: mean_of(rows.iter().filter_map(|r| r.rel_bias_lower)),
            mean_rel_bias_upper: mean_of(rows.iter().filter_map(|r| r.rel_bias_upper)),
            mean_width_ratio: mean_of(rows.iter().filter_map(|r| r.width_ratio)),
            mean_true_lower: rows.iter().map(|r| r.true_lower as f64).sum::<f64>() / nf,
            mean_true_upper: rows.iter().map(|r| r.true_upper as f64).sum::<f64>() / nf,
        }
    }
}

/// A failed replicate and the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub model: ModelUnderTest,
    pub calibration: Lambda0Calibration,
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<ReplicateFailure>,
    pub summary: ScenarioSummary,
}

fn interval_for(
    model: &ModelUnderTest,
    spec: &ScenarioSpec,
    trial: &GeneratedTrial,
    boot_seed: u64,
) -> Result<PredictionInterval> {
    let data = &trial.dataset;
    match model {
        ModelUnderTest::Oracle => plugin_interval(data, &trial.event_model, &trial.dropout_model, spec.dt, spec.alpha),
        ModelUnderTest::Plugin { event } => {
            let fits = FittedModels::fit(data, *event, Family::Exponential, &FitOptions::default())?;
            plugin_interval(data, &fits.event.model, &fits.dropout.model, spec.dt, spec.alpha)
        }
        ModelUnderTest::Bootstrap { event } => {
            let fits = FittedModels::fit(data, *event, Family::Exponential, &FitOptions::default())?;
            let cfg = BootstrapConfig {
                replicates: spec.b,
                alpha: spec.alpha,
                master_seed: boot_seed,
                poibin_method: spec.poibin_method,
                ..Default::default()
            };
            let cmf = bootstrap_cmfs(data, &fits, &[spec.dt], &cfg)?.remove(0);
            interval_from_cmf(&cmf.cmf, spec.alpha, spec.dt)
        }
    }
}

fn run_replicate(
    spec: &ScenarioSpec,
    cal: &Lambda0Calibration,
    model: &ModelUnderTest,
    seed: u64,
    r: usize,
) -> Result<MetricsRow> {
    let mut rng = stream_rng(seed, r as u64);
    let trial = generate_with(spec, cal, &mut rng)?;
    let boot_seed = rng.random::<u64>();
    let pi = interval_for(model, spec, &trial, boot_seed)?;
    MetricsRow::new(r, &trial, &pi, spec.alpha)
}

/// Calibrates `λ0`, then runs `spec.n_sim` replicates: generate a trial,
/// build the interval of `model`, and score it against the true-parameter
/// Poisson-binomial. Failed replicates are recorded, not fatal. The result
/// depends only on `(spec, model, seed)`, not on `threads`.
pub fn run_scenario(
    spec: &ScenarioSpec,
    model: &ModelUnderTest,
    seed: u64,
    threads: Option<usize>,
) -> Result<ScenarioResult> {
    spec.validate()?;
    let cal = calibrate_lambda0(spec, seed)?;
    log::info!(
        "scenario {:?} t_c={} dt={} hr={}: lambda0 = {:.4} (censoring {:.4})",
        spec.study,
        spec.t_c,
        spec.dt,
        spec.hr,
        cal.lambda0,
        cal.achieved_censoring
    );
    let run = || -> Vec<Result<MetricsRow>> {
        (0..spec.n_sim)
            .into_par_iter()
            .map(|r| run_replicate(spec, &cal, model, seed, r))
            .collect()
    };
    let outcomes = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("replicate {r} failed: {e}");
                failures.push(ReplicateFailure {
                    replicate: r,
                    error: e.to_string(),
                });
            }
        }
    }
    let summary = ScenarioSummary::new(&rows, failures.len());
    if summary.unreliable {
        log::warn!("{} of {} replicates failed; scenario unreliable", failures.len(), spec.n_sim);
    }
    Ok(ScenarioResult {
        spec: spec.clone(),
        model: *model,
        calibration: cal,
        rows,
        failures,
        summary,
    })
}
