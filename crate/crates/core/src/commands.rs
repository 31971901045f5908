//! Subcommand implementations behind the command-line front end. Each
//! returns its rows and can write them to an output directory.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::bootstrap::{bootstrap_cmfs, interval_from_cmf, plugin_cmf, prediction_interval};
use crate::data::InterimDataset;
use crate::diagnostics::{transformed_survival, DiagnosticPoint};
use crate::error::{Error, Result};
use crate::fit::{fit_event_model, FitOptions, FittedModels, ModelSpec};
use crate::io::{read_trial_csv, write_json, write_rows, RunConfig};
use crate::rng::stream_rng;
use crate::sim::{calibrate_lambda0, run_scenario, ScenarioResult, ScenarioSpec, Study};

/// Reads the trial named by the configuration.
pub fn load_trial(cfg: &RunConfig) -> Result<InterimDataset> {
    read_trial_csv(cfg.data_path()?, &cfg.covariates, cfg.interim()?)
}

/// One line of the model-comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    /// Number of free parameters.
    pub q: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
}

/// Fits each event model and returns the table sorted by BIC.
pub fn compare_models(data: &InterimDataset, specs: &[ModelSpec]) -> Result<Vec<FitRow>> {
    let mut rows = specs
        .iter()
        .map(|spec| {
            let f = fit_event_model(data, spec.family, spec.link)?;
            if !f.converged {
                log::warn!("{spec}: optimiser stopped before convergence");
            }
            Ok(FitRow {
                model: spec.to_string(),
                q: f.n_params,
                loglik: f.loglik,
                aic: f.aic,
                bic: f.bic,
                converged: f.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.bic.total_cmp(&b.bic));
    Ok(rows)
}

pub fn cmd_fit(cfg: &RunConfig, output: Option<&Path>) -> Result<Vec<FitRow>> {
    let data = load_trial(cfg)?;
    let rows = compare_models(&data, &cfg.comparison_specs())?;
    if let Some(dir) = output {
        write_rows(&dir.join("fit.csv"), &rows)?;
    }
    Ok(rows)
}

/// Bootstrap and plug-in intervals at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub horizon: f64,
    pub m_at_risk: usize,
    pub lower: usize,
    pub upper: usize,
    pub plugin_lower: usize,
    pub plugin_upper: usize,
    /// Mean of the bootstrap CMF.
    pub cmf_mean: f64,
    /// Expected events at the point estimates.
    pub plugin_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub model: ModelSpec,
    pub alpha: f64,
    pub bootstrap_replicates: usize,
    pub seed: u64,
    pub events_observed: usize,
    pub dropouts_observed: usize,
    /// Absent when nobody is at risk and nothing was fitted.
    pub fits: Option<FittedModels>,
    pub rows: Vec<PredictionRow>,
}

/// Intervals for every configured horizon from a single set of bootstrap
/// replicates.
pub fn predict(data: &InterimDataset, cfg: &RunConfig, threads: Option<usize>) -> Result<PredictionReport> {
    if cfg.horizons.is_empty() {
        return Err(Error::Config("`horizons` must list at least one prediction horizon".into()));
    }
    let boot = cfg.bootstrap_config(threads)?;
    let spec = cfg.event_spec();
    let m = data.at_risk().count();
    let mut report = PredictionReport {
        model: spec,
        alpha: cfg.alpha,
        bootstrap_replicates: boot.replicates,
        seed: boot.master_seed,
        events_observed: data.count(crate::data::Outcome::Event),
        dropouts_observed: data.count(crate::data::Outcome::Dropout),
        fits: None,
        rows: Vec::new(),
    };
    if m == 0 {
        log::warn!("no subject is at risk at the interim; every interval is [0, 0]");
        report.rows = cfg
            .horizons
            .iter()
            .map(|&horizon| PredictionRow {
                horizon,
                m_at_risk: 0,
                lower: 0,
                upper: 0,
                plugin_lower: 0,
                plugin_upper: 0,
                cmf_mean: 0.0,
                plugin_mean: 0.0,
            })
            .collect();
        return Ok(report);
    }
    let fits = FittedModels::fit(data, spec, cfg.dropout_family, &FitOptions::default())?;
    let cmfs = bootstrap_cmfs(data, &fits, &cfg.horizons, &boot)?;
    report.rows = cmfs
        .iter()
        .map(|cmf| {
            let pi = prediction_interval(cmf, cfg.alpha)?;
            let plug = plugin_cmf(data, &fits.event.model, &fits.dropout.model, cmf.horizon, cfg.poibin_method)?;
            let plug_pi = interval_from_cmf(&plug, cfg.alpha, cmf.horizon)?;
            let plugin_mean = plug[..m].iter().map(|f| 1.0 - f).sum();
            Ok(PredictionRow {
                horizon: cmf.horizon,
                m_at_risk: m,
                lower: pi.lower,
                upper: pi.upper,
                plugin_lower: plug_pi.lower,
                plugin_upper: plug_pi.upper,
                cmf_mean: cmf.mean(),
                plugin_mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    report.fits = Some(fits);
    Ok(report)
}

pub fn cmd_predict(cfg: &RunConfig, threads: Option<usize>, output: Option<&Path>) -> Result<PredictionReport> {
    let data = load_trial(cfg)?;
    let report = predict(&data, cfg, threads)?;
    if let Some(dir) = output {
        write_rows(&dir.join("prediction.csv"), &report.rows)?;
        write_json(&dir.join("prediction.json"), &report)?;
    }
    Ok(report)
}

/// Per-replicate metrics tagged with their scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub scenario: usize,
    pub replicate: usize,
    pub m_at_risk: usize,
    pub realized_events: usize,
    pub lower: usize,
    pub upper: usize,
    pub true_lower: usize,
    pub true_upper: usize,
    pub ccp: f64,
    pub covered: bool,
    pub rel_bias_lower: Option<f64>,
    pub rel_bias_upper: Option<f64>,
    pub width_ratio: Option<f64>,
}

/// Scenario factors with the calibration and the summary metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: usize,
    pub study: Study,
    pub t_c: f64,
    pub dt: f64,
    pub hr: f64,
    pub rho: f64,
    pub k: f64,
    pub p_censor_target: f64,
    pub n: usize,
    pub n_sim: usize,
    pub b: usize,
    pub lambda0: f64,
    pub achieved_censoring: f64,
    pub replicates_ok: usize,
    pub replicates_failed: usize,
    pub unreliable: bool,
    pub ucp: f64,
    pub ucp_se: f64,
    pub realized_coverage: f64,
    pub mean_rel_bias_lower: Option<f64>,
    pub mean_rel_bias_upper: Option<f64>,
    pub mean_width_ratio: Option<f64>,
    pub mean_true_lower: f64,
    pub mean_true_upper: f64,
}

/// Seed of scenario `index` in a grid run with `seed`.
pub fn scenario_seed(seed: u64, index: usize) -> u64 {
    stream_rng(seed, index as u64).random()
}

pub fn simulate(cfg: &RunConfig, threads: Option<usize>) -> Result<Vec<ScenarioResult>> {
    if cfg.scenario.is_empty() {
        return Err(Error::Config("no [[scenario]] entries".into()));
    }
    let model = cfg.model_under_test();
    cfg.scenario
        .iter()
        .enumerate()
        .map(|(i, spec)| run_scenario(spec, &model, scenario_seed(cfg.seed, i), threads))
        .collect()
}

pub fn replicate_rows(results: &[ScenarioResult]) -> Vec<ReplicateRow> {
    results
        .iter()
        .enumerate()
        .flat_map(|(scenario, r)| {
            r.rows.iter().map(move |m| ReplicateRow {
                scenario,
                replicate: m.replicate,
                m_at_risk: m.m_at_risk,
                realized_events: m.realized_events,
                lower: m.lower,
                upper: m.upper,
                true_lower: m.true_lower,
                true_upper: m.true_upper,
                ccp: m.ccp,
                covered: m.covered,
                rel_bias_lower: m.rel_bias_lower,
                rel_bias_upper: m.rel_bias_upper,
                width_ratio: m.width_ratio,
            })
        })
        .collect()
}

pub fn summary_rows(results: &[ScenarioResult]) -> Vec<SummaryRow> {
    results
        .iter()
        .enumerate()
        .map(|(scenario, r)| {
            let (s, m) = (&r.spec, &r.summary);
            SummaryRow {
                scenario,
                study: s.study,
                t_c: s.t_c,
                dt: s.dt,
                hr: s.hr,
                rho: s.rho,
                k: s.k,
                p_censor_target: s.p_censor_target,
                n: s.n,
                n_sim: s.n_sim,
                b: s.b,
                lambda0: r.calibration.lambda0,
                achieved_censoring: r.calibration.achieved_censoring,
                replicates_ok: m.replicates_ok,
                replicates_failed: m.replicates_failed,
                unreliable: m.unreliable,
                ucp: m.ucp,
                ucp_se: m.ucp_se,
                realized_coverage: m.realized_coverage,
                mean_rel_bias_lower: m.mean_rel_bias_lower,
                mean_rel_bias_upper: m.mean_rel_bias_upper,
                mean_width_ratio: m.mean_width_ratio,
                mean_true_lower: m.mean_true_lower,
                mean_true_upper: m.mean_true_upper,
            }
        })
        .collect()
}

pub fn cmd_simulate(cfg: &RunConfig, threads: Option<usize>, output: Option<&Path>) -> Result<Vec<SummaryRow>> {
    let results = simulate(cfg, threads)?;
    let summary = summary_rows(&results);
    if let Some(dir) = output {
        write_rows(&dir.join("simulation_replicates.csv"), &replicate_rows(&results))?;
        write_rows(&dir.join("simulation_summary.csv"), &summary)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub scenario: usize,
    pub study: Study,
    pub t_c: f64,
    pub hr: f64,
    pub rho: f64,
    pub k: f64,
    pub p_censor_target: f64,
    pub lambda0: f64,
    pub achieved_censoring: f64,
    pub iterations: usize,
    pub rho_star: Option<f64>,
    pub rho_achieved: Option<f64>,
    pub rho_iterations: Option<usize>,
}

pub fn calibrate(scenarios: &[ScenarioSpec], seed: u64) -> Result<Vec<CalibrationRow>> {
    scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let c = calibrate_lambda0(s, scenario_seed(seed, i))?;
            Ok(CalibrationRow {
                scenario: i,
                study: s.study,
                t_c: s.t_c,
                hr: s.hr,
                rho: s.rho,
                k: s.k,
                p_censor_target: s.p_censor_target,
                lambda0: c.lambda0,
                achieved_censoring: c.achieved_censoring,
                iterations: c.iterations,
                rho_star: c.norta.map(|n| n.rho_star),
                rho_achieved: c.norta.map(|n| n.achieved),
                rho_iterations: c.norta.map(|n| n.iterations),
            })
        })
        .collect()
}

pub fn cmd_calibrate(cfg: &RunConfig, output: Option<&Path>) -> Result<Vec<CalibrationRow>> {
    if cfg.scenario.is_empty() {
        return Err(Error::Config("no [[scenario]] entries".into()));
    }
    let rows = calibrate(&cfg.scenario, cfg.seed)?;
    if let Some(dir) = output {
        write_rows(&dir.join("calibration.csv"), &rows)?;
    }
    Ok(rows)
}

pub fn cmd_diagnose(cfg: &RunConfig, output: Option<&Path>) -> Result<Vec<DiagnosticPoint>> {
    let data = load_trial(cfg)?;
    let points = transformed_survival(&data);
    if let Some(dir) = output {
        write_rows(&dir.join("diagnostics.csv"), &points)?;
    }
    Ok(points)
}
