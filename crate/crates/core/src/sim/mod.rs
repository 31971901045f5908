//! Simulation study of interval coverage: trial generation, calibration of
//! the baseline scale to a target interim-censoring proportion, and
//! Monte Carlo coverage, bias and width metrics.

mod generate;
mod study;
mod synthetic;

pub use generate::{
    generate_weibull_ph, norta_entry_dropout, NortaCalibration, WeibullSample, CALIBRATION_SAMPLE, CALIBRATION_TOL,
};
pub use study::{
    generate_trial, run_scenario, GeneratedTrial, MetricsRow, ModelUnderTest, ReplicateFailure, ScenarioResult,
    ScenarioSummary, MAX_FAILURE_FRACTION,
};
pub use synthetic::{synthetic_trial, TrialShape};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poibin::PoiBinMethod;
use crate::rng::stream_rng;
use generate::{calibrate_rho_star, solve_lambda0, LatentTrial, NormalPairs, TrialDesign};

/// Stream reserved for calibration draws; replicate `r` uses stream `r`.
const CALIBRATION_STREAM: u64 = u64::MAX;
const NORTA_STREAM: u64 = u64::MAX - 1;

/// Data-generating mechanism: `S1` has exponential dropout correlated with
/// entry, `S2` has administrative censoring only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Study {
    S1,
    S2,
}

/// One cell of the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub study: Study,
    /// Minimum follow-up at the interim: time from the end of accrual.
    pub t_c: f64,
    /// Prediction horizon.
    pub dt: f64,
    /// Hazard ratio of the treated arm.
    pub hr: f64,
    /// Entry-dropout correlation (`S1`).
    #[serde(default)]
    pub rho: f64,
    /// Dropout rate as a multiple of the baseline event scale (`S1`).
    #[serde(default)]
    pub k: f64,
    /// Target share of subjects still at risk at the interim.
    pub p_censor_target: f64,
    /// Subjects per trial.
    pub n: usize,
    /// Monte Carlo replicates.
    pub n_sim: usize,
    /// Bootstrap replicates.
    pub b: usize,
    #[serde(default = "default_accrual_span")]
    pub accrual_span: f64,
    #[serde(default = "default_shape")]
    pub shape: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_calibration_n")]
    pub calibration_n: usize,
    #[serde(default = "default_poibin")]
    pub poibin_method: PoiBinMethod,
}

fn default_accrual_span() -> f64 {
    3.0
}
fn default_shape() -> f64 {
    0.6
}
fn default_alpha() -> f64 {
    0.05
}
fn default_calibration_n() -> usize {
    CALIBRATION_SAMPLE
}
fn default_poibin() -> PoiBinMethod {
    PoiBinMethod::Auto
}

impl ScenarioSpec {
    /// `S2` cell with the defaults for everything not listed.
    pub fn s2(t_c: f64, dt: f64, hr: f64, p_censor_target: f64, n: usize) -> Self {
        ScenarioSpec {
            study: Study::S2,
            t_c,
            dt,
            hr,
            rho: 0.0,
            k: 0.0,
            p_censor_target,
            n,
            n_sim: 200,
            b: 100,
            accrual_span: default_accrual_span(),
            shape: default_shape(),
            alpha: default_alpha(),
            calibration_n: CALIBRATION_SAMPLE,
            poibin_method: PoiBinMethod::Auto,
        }
    }

    /// `S1` cell with the defaults for everything not listed.
    #[allow(clippy::too_many_arguments)]
    pub fn s1(t_c: f64, dt: f64, hr: f64, rho: f64, k: f64, p_censor_target: f64, n: usize) -> Self {
        ScenarioSpec {
            study: Study::S1,
            rho,
            k,
            ..Self::s2(t_c, dt, hr, p_censor_target, n)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_c", self.t_c),
            ("dt", self.dt),
            ("hr", self.hr),
            ("accrual_span", self.accrual_span),
            ("shape", self.shape),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("scenario {name} must be positive and finite (got {v})")));
        }
        if self.n == 0 || self.n_sim == 0 || self.b == 0 || self.calibration_n < 2 {
            return Err(Error::Config("n, n_sim and b must be at least 1, calibration_n at least 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.study == Study::S1 {
            if !(self.k > 0.0 && self.k.is_finite()) {
                return Err(Error::Config(format!("S1 needs a positive dropout multiple k (got {})", self.k)));
            }
            if !(self.rho > -1.0 && self.rho < 1.0) {
                return Err(Error::Config(format!("rho {} outside (-1, 1)", self.rho)));
            }
        }
        Ok(())
    }

    /// Interim calendar time, measured from the first entry.
    pub fn interim(&self) -> f64 {
        self.accrual_span + self.t_c
    }

    pub(crate) fn design(&self, lambda0: f64) -> TrialDesign {
        TrialDesign {
            shape: self.shape,
            lambda0,
            beta: self.hr.ln(),
            psi: (self.study == Study::S1).then_some(self.k * lambda0),
            accrual_span: self.accrual_span,
            interim: self.interim(),
        }
    }
}

/// Baseline scale matching the target censoring proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda0Calibration {
    pub lambda0: f64,
    /// Interim-censoring proportion on the calibration sample at `lambda0`.
    pub achieved_censoring: f64,
    pub iterations: usize,
    /// Auxiliary normal correlation (`S1` only).
    pub norta: Option<NortaCalibration>,
}

/// Calibrates the baseline scale `λ0` by bisection on a fixed calibration
/// sample of `spec.calibration_n` subjects, and for `S1` first the NORTA
/// correlation. The correlation does not depend on `λ0`, so it is found once.
pub fn calibrate_lambda0(spec: &ScenarioSpec, seed: u64) -> Result<Lambda0Calibration> {
    spec.validate()?;
    let norta = match spec.study {
        Study::S2 => None,
        Study::S1 => {
            let pairs = NormalPairs::draw(spec.calibration_n, &mut stream_rng(seed, NORTA_STREAM));
            Some(calibrate_rho_star(&pairs, spec.rho)?)
        }
    };
    let latent = LatentTrial::draw(
        spec.calibration_n,
        norta.map(|c| c.rho_star),
        &mut stream_rng(seed, CALIBRATION_STREAM),
    );
    let (lambda0, achieved_censoring, iterations) =
        solve_lambda0(&latent, |l| spec.design(l), spec.p_censor_target)?;
    Ok(Lambda0Calibration {
        lambda0,
        achieved_censoring,
        iterations,
        norta,
    })
}
