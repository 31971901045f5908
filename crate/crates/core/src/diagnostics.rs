//! Kaplan-Meier curves per covariate stratum on the transformed scales used
//! to judge link choice: straight parallel lines in `log t` support a model.

use serde::{Deserialize, Serialize};

use crate::data::InterimDataset;
use crate::survival::LinkScale;

/// Product-limit estimate `(t, S(t))` at each distinct event time.
pub fn kaplan_meier(times: &[(f64, bool)]) -> Vec<(f64, f64)> {
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut at_risk = sorted.len();
    let mut s = 1.0;
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        let (mut events, mut leaving) = (0usize, 0usize);
        while i < sorted.len() && sorted[i].0 == t {
            events += usize::from(sorted[i].1);
            leaving += 1;
            i += 1;
        }
        if events > 0 {
            s *= 1.0 - events as f64 / at_risk as f64;
            out.push((t, s));
        }
        at_risk -= leaving;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticPoint {
    pub stratum: String,
    pub link: LinkScale,
    pub log_t: f64,
    /// `g(S(t))` for the link's transformation `g`.
    pub value: f64,
}

/// `(log t, g(Ŝ(t)))` for every covariate stratum and link scale. Strata are
/// the distinct covariate vectors; strata without events are skipped.
pub fn transformed_survival(data: &InterimDataset) -> Vec<DiagnosticPoint> {
    let mut strata: Vec<Vec<f64>> = Vec::new();
    for s in data.subjects() {
        if !strata.contains(&s.z) {
            strata.push(s.z.clone());
        }
    }
    strata.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = Vec::new();
    for z in strata {
        let label = if z.is_empty() {
            "all".to_string()
        } else {
            data.covariate_names()
                .iter()
                .zip(&z)
                .map(|(n, v)| format!("{n}={v}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let times: Vec<(f64, bool)> = data
            .subjects()
            .iter()
            .filter(|s| s.z == z)
            .map(|s| (s.t_obs, s.delta()))
            .collect();
        let curve = kaplan_meier(&times);
        if curve.is_empty() {
            log::warn!("stratum {label} has no events; skipped");
            continue;
        }
        for link in LinkScale::ALL {
            for &(t, s) in &curve {
                if let Ok(value) = link.transform_survival(s) {
                    out.push(DiagnosticPoint {
                        stratum: label.clone(),
                        link,
                        log_t: t.ln(),
                        value,
                    });
                }
            }
        }
    }
    out
}
