//! Interim trial data: one record per enrolled subject.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};

/// Tolerance when checking that an administratively censored follow-up ends
/// exactly at the interim time.
pub const ADMIN_CENSOR_TOL: f64 = 1e-9;

/// How a subject's follow-up ended by the interim analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Event observed (`delta = 1`).
    Event,
    /// Lost to follow-up before the interim (`epsilon = 1`).
    Dropout,
    /// Still event-free and under follow-up at the interim (`gamma = 1`).
    AdminCensored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    /// Calendar entry time.
    pub entry_time: f64,
    /// Follow-up time since entry.
    pub t_obs: f64,
    pub outcome: Outcome,
    pub z: Vec<f64>,
}

impl SubjectRecord {
    pub fn delta(&self) -> bool {
        self.outcome == Outcome::Event
    }

    pub fn epsilon(&self) -> bool {
        self.outcome == Outcome::Dropout
    }

    pub fn gamma(&self) -> bool {
        self.outcome == Outcome::AdminCensored
    }
}

/// Subjects observed at interim calendar time `t_c`, with accrual closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterimDataset {
    subjects: Vec<SubjectRecord>,
    t_c: f64,
    covariate_names: Vec<String>,
}

impl InterimDataset {
    pub fn new(subjects: Vec<SubjectRecord>, t_c: f64, covariate_names: Vec<String>) -> Result<Self> {
        if !t_c.is_finite() {
            return Err(Error::InvalidData(format!("interim time {t_c} is not finite")));
        }
        let mut seen = HashSet::with_capacity(subjects.len());
        for s in &subjects {
            let bad = |msg: String| Err(Error::InvalidData(format!("subject {}: {msg}", s.id)));
            if !seen.insert(s.id.as_str()) {
                return bad("duplicate id".into());
            }
            if !(s.entry_time >= 0.0 && s.entry_time <= t_c) {
                return bad(format!("entry time {} outside [0, {t_c}]", s.entry_time));
            }
            if !(s.t_obs > 0.0 && s.t_obs.is_finite()) {
                return bad(format!("follow-up time {} must be positive", s.t_obs));
            }
            let elapsed = t_c - s.entry_time;
            if s.t_obs > elapsed + ADMIN_CENSOR_TOL {
                return bad(format!("follow-up {} exceeds time since entry {elapsed}", s.t_obs));
            }
            if s.gamma() && (s.t_obs - elapsed).abs() > ADMIN_CENSOR_TOL {
                return bad(format!(
                    "administratively censored at {} but interim follow-up is {elapsed}",
                    s.t_obs
                ));
            }
            if s.z.len() != covariate_names.len() {
                return bad(format!("{} covariates, expected {}", s.z.len(), covariate_names.len()));
            }
            if s.z.iter().any(|v| !v.is_finite()) {
                return bad("non-finite covariate".into());
            }
        }
        Ok(InterimDataset {
            subjects,
            t_c,
            covariate_names,
        })
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.subjects.iter().filter(|s| s.outcome == outcome).count()
    }

    /// Subjects still at risk at the interim (`gamma = 1`), in dataset order.
    pub fn at_risk(&self) -> impl Iterator<Item = &SubjectRecord> {
        self.subjects.iter().filter(|s| s.gamma())
    }

    /// Elapsed follow-up `t_c - entry` of a subject.
    pub fn elapsed(&self, s: &SubjectRecord) -> f64 {
        self.t_c - s.entry_time
    }

    /// Same subjects and entry data with new follow-up outcomes.
    pub(crate) fn with_subjects(&self, subjects: Vec<SubjectRecord>) -> Self {
        InterimDataset {
            subjects,
            t_c: self.t_c,
            covariate_names: self.covariate_names.clone(),
        }
    }
}
