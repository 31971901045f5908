//! Synthetic interim datasets with prescribed event and dropout counts, for
//! exercising the pipeline on data shaped like a real trial.

use rand::Rng;

use crate::data::{InterimDataset, Outcome, SubjectRecord};
use crate::error::{Error, Result};
use crate::rng::{open_unit, stream_rng};

/// Shape of a synthetic trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialShape {
    pub n: usize,
    pub events: usize,
    pub dropouts: usize,
    pub accrual_span: f64,
    /// Interim calendar time; at least `accrual_span`.
    pub interim: f64,
    /// Weibull shape of the event times.
    pub shape: f64,
    pub hazard_ratio: f64,
}

/// Two-arm Weibull-PH trial with exponential dropout and uniform entry whose
/// event and dropout rates are tuned so that exactly `events` events and
/// `dropouts` dropouts are observed at the interim.
pub fn synthetic_trial(shape: &TrialShape, seed: u64) -> Result<InterimDataset> {
    let TrialShape {
        n,
        events,
        dropouts,
        accrual_span,
        interim,
        ..
    } = *shape;
    if events + dropouts > n || !(interim >= accrual_span && accrual_span > 0.0) {
        return Err(Error::Config(format!(
            "cannot place {events} events and {dropouts} dropouts among {n} subjects"
        )));
    }
    for attempt in 0..20 {
        if let Some(data) = attempt_trial(shape, &mut stream_rng(seed, attempt))? {
            return Ok(data);
        }
    }
    Err(Error::Calibration(format!(
        "no rates give exactly {events} events and {dropouts} dropouts for seed {seed}"
    )))
}

/// Smallest `x` in `[lo, hi]`, up to bracket resolution, where the
/// nondecreasing step function `count(x)` reaches `target`.
fn first_reaching(count: impl Fn(f64) -> usize, target: usize, mut lo: f64, mut hi: f64) -> Option<f64> {
    if count(hi) < target {
        return None;
    }
    if count(lo) >= target {
        return Some(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if count(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn attempt_trial(shape: &TrialShape, rng: &mut impl Rng) -> Result<Option<InterimDataset>> {
    let TrialShape {
        n,
        events,
        dropouts,
        accrual_span,
        interim,
        ..
    } = *shape;
    let z: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 }).collect();
    let entry: Vec<f64> = (0..n).map(|_| accrual_span * rng.random::<f64>()).collect();
    let e: Vec<f64> = (0..n).map(|_| -open_unit(rng).ln()).collect();
    let d: Vec<f64> = (0..n).map(|_| -open_unit(rng).ln()).collect();
    let beta = shape.hazard_ratio.ln();
    let times = |lambda: f64, psi: f64, i: usize| {
        let t = (e[i] / (lambda * (beta * z[i]).exp())).powf(1.0 / shape.shape);
        (t, d[i] / psi, interim - entry[i])
    };
    let counts = |lambda: f64, psi: f64| {
        (0..n).fold((0usize, 0usize), |(ev, dr), i| {
            let (t, l, admin) = times(lambda, psi, i);
            if admin < t.min(l) {
                (ev, dr)
            } else if t <= l {
                (ev + 1, dr)
            } else {
                (ev, dr + 1)
            }
        })
    };
    // event count rises in the event scale at fixed dropout rate; along that
    // curve the dropout count rises in the dropout rate
    let event_scale = |ln_psi: f64| first_reaching(|x| counts(x.exp(), ln_psi.exp()).0, events, -40.0, 40.0);
    let dropout_count = |ln_psi: f64| event_scale(ln_psi).map_or(0, |x| counts(x.exp(), ln_psi.exp()).1);
    let Some(ln_psi) = first_reaching(dropout_count, dropouts, -40.0, 10.0) else {
        return Ok(None);
    };
    let Some(ln_lambda) = event_scale(ln_psi) else {
        return Ok(None);
    };
    let (lambda, psi) = (ln_lambda.exp(), ln_psi.exp());
    if counts(lambda, psi) != (events, dropouts) {
        return Ok(None);
    }
    let subjects = (0..n)
        .map(|i| {
            let (t, l, admin) = times(lambda, psi, i);
            let (t_obs, outcome) = if admin < t.min(l) {
                (admin, Outcome::AdminCensored)
            } else if t <= l {
                (t, Outcome::Event)
            } else {
                (l, Outcome::Dropout)
            };
            SubjectRecord {
                id: format!("{:04}", i + 1),
                entry_time: entry[i],
                t_obs: t_obs.max(f64::MIN_POSITIVE),
                outcome,
                z: vec![z[i]],
            }
        })
        .collect();
    InterimDataset::new(subjects, interim, vec!["treatment".into()]).map(Some)
}
