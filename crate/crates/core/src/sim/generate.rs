//! Weibull proportional-hazards trials with uniform staggered entry and an
//! optional exponential dropout correlated with entry through NORTA.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{InterimDataset, Outcome, SubjectRecord};
use crate::error::{Error, Result};
use crate::numeric::norm_quantile;
use crate::numeric::roots::bisect;
use crate::rng::{open_unit, stream_rng};

/// Default calibration sample size for the NORTA correlation and the
/// baseline scale.
pub const CALIBRATION_SAMPLE: usize = 20_000;

/// Tolerance for both calibrations, on the calibrated statistic.
pub const CALIBRATION_TOL: f64 = 0.001;

/// Event times `T = (-ln U / λ*)^{1/γ}`, `λ* = λ0 e^{βZ}`, with `Z ~ Bernoulli(0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullSample {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn generate_weibull_ph(n: usize, shape: f64, lambda0: f64, beta: f64, seed: u64) -> Result<WeibullSample> {
    if !(shape > 0.0 && lambda0 > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "Weibull generator needs shape, lambda0 > 0 (got {shape}, {lambda0})"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let mut times = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let arm = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
        let e = -open_unit(&mut rng).ln();
        times.push((e / (lambda0 * (beta * arm).exp())).powf(1.0 / shape));
        z.push(arm);
    }
    Ok(WeibullSample { times, z })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    sxy / (sxx * syy).sqrt()
}

/// Standard normal pairs `(Z1, W)`; the correlated second coordinate is
/// `ρ* Z1 + sqrt(1 - ρ*²) W`.
#[derive(Debug, Clone)]
pub(crate) struct NormalPairs {
    z1: Vec<f64>,
    w: Vec<f64>,
}

impl NormalPairs {
    pub(crate) fn draw(n: usize, rng: &mut impl Rng) -> Self {
        let mut z1 = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            z1.push(norm_quantile(open_unit(rng)));
            w.push(norm_quantile(open_unit(rng)));
        }
        NormalPairs { z1, w }
    }

    /// Entry fractions `U1 = Φ(Z1)` and unit-rate exponentials
    /// `-ln(1 - U2)`, `U2 = Φ(Z2)`.
    pub(crate) fn margins(&self, rho_star: f64, i: usize) -> (f64, f64) {
        let z2 = rho_star * self.z1[i] + (1.0 - rho_star * rho_star).sqrt() * self.w[i];
        (crate::numeric::norm_cdf(self.z1[i]), -crate::numeric::norm_ln_cdf(-z2))
    }

    fn correlation(&self, rho_star: f64, n: usize) -> f64 {
        let (u, e): (Vec<f64>, Vec<f64>) = (0..n).map(|i| self.margins(rho_star, i)).unzip();
        pearson(&u, &e)
    }

    pub(crate) fn len(&self) -> usize {
        self.z1.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NortaCalibration {
    /// Correlation of the underlying normals.
    pub rho_star: f64,
    /// Entry-dropout correlation achieved on the calibration sample.
    pub achieved: f64,
    pub iterations: usize,
}

/// Bisection for the normal correlation `ρ*` giving `corr(entry, L) = ρ` on
/// the pairs. Pearson correlation is invariant to the scale of either margin,
/// so the result does not depend on the accrual span or the dropout rate.
pub(crate) fn calibrate_rho_star(pairs: &NormalPairs, rho_target: f64) -> Result<NortaCalibration> {
    if !(rho_target > -1.0 && rho_target < 1.0) {
        return Err(Error::Calibration(format!("target correlation {rho_target} outside (-1, 1)")));
    }
    let n = pairs.len();
    if rho_target == 0.0 {
        return Ok(NortaCalibration {
            rho_star: 0.0,
            achieved: pairs.correlation(0.0, n),
            iterations: 0,
        });
    }
    let edge = 0.9999;
    let (c_lo, c_hi) = (pairs.correlation(-edge, n), pairs.correlation(edge, n));
    if rho_target <= c_lo || rho_target >= c_hi {
        return Err(Error::Calibration(format!(
            "correlation {rho_target} is not attainable for uniform entry and exponential dropout \
             (range ({c_lo:.3}, {c_hi:.3}))"
        )));
    }
    let (mut lo, mut hi) = (-edge, edge);
    for it in 1..=100 {
        let mid = 0.5 * (lo + hi);
        let c = pairs.correlation(mid, n);
        if (c - rho_target).abs() < CALIBRATION_TOL {
            return Ok(NortaCalibration {
                rho_star: mid,
                achieved: c,
                iterations: it,
            });
        }
        if c < rho_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "NORTA correlation did not reach {rho_target} within 100 iterations"
    )))
}

/// Entry times on `[0, tau_a]` and exponential(`psi`) dropout times whose
/// Pearson correlation is `rho_target`. The auxiliary correlation is
/// calibrated on the first `max(n, 20000)` normal pairs, and the first `n`
/// transformed pairs are returned.
pub fn norta_entry_dropout(
    n: usize,
    tau_a: f64,
    psi: f64,
    rho_target: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>, NortaCalibration)> {
    if !(tau_a > 0.0 && psi > 0.0) {
        return Err(Error::Domain(format!("need tau_a > 0 and psi > 0 (got {tau_a}, {psi})")));
    }
    let pairs = NormalPairs::draw(n.max(CALIBRATION_SAMPLE), &mut stream_rng(seed, 0));
    let cal = calibrate_rho_star(&pairs, rho_target)?;
    let (entry, dropout) = (0..n)
        .map(|i| {
            let (u, e) = pairs.margins(cal.rho_star, i);
            (tau_a * u, e / psi)
        })
        .unzip();
    Ok((entry, dropout, cal))
}

/// Latent draws of one simulated trial that do not depend on the baseline
/// scale; the trial for a given `λ0` is a deterministic map of these, which
/// keeps the censoring proportion monotone in `λ0` during calibration.
#[derive(Debug, Clone)]
pub(crate) struct LatentTrial {
    pub z: Vec<f64>,
    /// Standard exponentials for the event times.
    pub e_event: Vec<f64>,
    /// Entry fractions of the accrual span.
    pub entry_frac: Vec<f64>,
    /// Standard exponentials for dropout; absent without dropout.
    pub e_dropout: Option<Vec<f64>>,
}

impl LatentTrial {
    /// `rho_star = None` draws a trial without dropout and independent entry.
    pub(crate) fn draw(n: usize, rho_star: Option<f64>, rng: &mut impl Rng) -> Self {
        let z = (0..n).map(|_| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 }).collect();
        let e_event = (0..n).map(|_| -open_unit(rng).ln()).collect();
        match rho_star {
            None => LatentTrial {
                z,
                e_event,
                entry_frac: (0..n).map(|_| rng.random::<f64>()).collect(),
                e_dropout: None,
            },
            Some(r) => {
                let pairs = NormalPairs::draw(n, rng);
                let (entry_frac, e_dropout) = (0..n).map(|i| pairs.margins(r, i)).unzip();
                LatentTrial {
                    z,
                    e_event,
                    entry_frac,
                    e_dropout: Some(e_dropout),
                }
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.z.len()
    }
}

/// Design of a simulated trial given the baseline scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TrialDesign {
    pub shape: f64,
    pub lambda0: f64,
    pub beta: f64,
    /// Dropout rate; `None` without dropout.
    pub psi: Option<f64>,
    pub accrual_span: f64,
    /// Interim calendar time, `accrual_span + t_c`.
    pub interim: f64,
}

/// One subject's latent and observed times.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SubjectTimes {
    pub entry: f64,
    pub t: f64,
    pub l: f64,
    pub admin: f64,
}

impl TrialDesign {
    pub(crate) fn subject(&self, latent: &LatentTrial, i: usize) -> SubjectTimes {
        let rate = self.lambda0 * (self.beta * latent.z[i]).exp();
        let entry = self.accrual_span * latent.entry_frac[i];
        let l = match (&latent.e_dropout, self.psi) {
            (Some(e), Some(psi)) => e[i] / psi,
            _ => f64::INFINITY,
        };
        SubjectTimes {
            entry,
            t: (latent.e_event[i] / rate).powf(1.0 / self.shape),
            l,
            admin: self.interim - entry,
        }
    }

    /// Share of subjects still at risk at the interim.
    pub(crate) fn censored_fraction(&self, latent: &LatentTrial) -> f64 {
        let censored = (0..latent.len())
            .filter(|&i| {
                let s = self.subject(latent, i);
                s.admin < s.t.min(s.l)
            })
            .count();
        censored as f64 / latent.len() as f64
    }

    /// Observed interim data plus each subject's latent event and dropout time.
    pub(crate) fn realize(&self, latent: &LatentTrial) -> Result<(InterimDataset, Vec<SubjectTimes>)> {
        let times: Vec<SubjectTimes> = (0..latent.len()).map(|i| self.subject(latent, i)).collect();
        let subjects = times
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (t_obs, outcome) = if s.admin < s.t.min(s.l) {
                    (s.admin, Outcome::AdminCensored)
                } else if s.t <= s.l {
                    (s.t, Outcome::Event)
                } else {
                    (s.l, Outcome::Dropout)
                };
                SubjectRecord {
                    id: format!("{}", i + 1),
                    entry_time: s.entry,
                    t_obs: t_obs.max(f64::MIN_POSITIVE),
                    outcome,
                    z: vec![latent.z[i]],
                }
            })
            .collect();
        let data = InterimDataset::new(subjects, self.interim, vec!["treatment".into()])?;
        Ok((data, times))
    }
}

/// Bisection for `λ0` matching the interim-censoring proportion on a fixed
/// latent sample; the proportion decreases in `λ0`.
pub(crate) fn solve_lambda0(
    latent: &LatentTrial,
    design: impl Fn(f64) -> TrialDesign,
    target: f64,
) -> Result<(f64, f64, usize)> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Calibration(format!("censoring proportion {target} outside (0, 1)")));
    }
    let frac = |lambda0: f64| design(lambda0).censored_fraction(latent);
    let lo = 1e-6;
    let mut hi = 1.0;
    if frac(lo) < target {
        return Err(Error::Calibration(format!(
            "censoring proportion {target} not reached even at lambda0 = {lo}"
        )));
    }
    let mut doublings = 0;
    while frac(hi) > target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Calibration(format!("no lambda0 bracket for censoring proportion {target}")));
        }
    }
    let mut iterations = 0;
    let mut best = None;
    bisect(
        |x| {
            iterations += 1;
            let p = frac(x);
            if (p - target).abs() < CALIBRATION_TOL && best.is_none() {
                best = Some((x, p));
                // returning zero stops the bisection here
                return 0.0;
            }
            target - p
        },
        lo,
        hi,
        0.0,
        300,
    );
    match best {
        Some((x, p)) => Ok((x, p, iterations)),
        None => Err(Error::Calibration(format!(
            "censoring proportion {target} not matched within {CALIBRATION_TOL} after 300 iterations"
        ))),
    }
}
