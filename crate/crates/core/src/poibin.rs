//! Poisson-binomial distribution of a sum of independent Bernoulli trials
//! with unequal success probabilities.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::norm_cdf;

/// Largest number of trials enumerated by [`PoiBinMethod::BruteForce`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Above this many trials [`PoiBinMethod::Auto`] switches to the Poisson
/// approximation.
pub const AUTO_EXACT_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiBinMethod {
    /// `O(m²)` convolution recursion.
    ExactDp,
    /// `Poisson(Σπ)` masses on `{0..m}`; the tail beyond `m` is not folded
    /// back, so the CMF is set to 1 at `m`.
    Poisson,
    /// Continuity-corrected normal with the exact mean and variance.
    Normal,
    /// Enumeration of all `2^m` outcomes; test oracle for small `m`.
    BruteForce,
    /// `ExactDp` up to [`AUTO_EXACT_LIMIT`] trials, `Poisson` above.
    Auto,
}

impl PoiBinMethod {
    pub fn resolve(self, m: usize) -> PoiBinMethod {
        match self {
            PoiBinMethod::Auto if m <= AUTO_EXACT_LIMIT => PoiBinMethod::ExactDp,
            PoiBinMethod::Auto => PoiBinMethod::Poisson,
            other => other,
        }
    }
}

impl fmt::Display for PoiBinMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoiBinMethod::ExactDp => "exact",
            PoiBinMethod::Poisson => "poisson",
            PoiBinMethod::Normal => "normal",
            PoiBinMethod::BruteForce => "brute-force",
            PoiBinMethod::Auto => "auto",
        })
    }
}

impl FromStr for PoiBinMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "exact_dp" | "exact-dp" | "dp" => PoiBinMethod::ExactDp,
            "poisson" => PoiBinMethod::Poisson,
            "normal" => PoiBinMethod::Normal,
            "brute-force" | "brute_force" | "enumerate" => PoiBinMethod::BruteForce,
            "auto" => PoiBinMethod::Auto,
            _ => return Err(Error::Config(format!("unknown Poisson-binomial method `{s}`"))),
        })
    }
}

/// Distribution of `Y = Σ_j Bernoulli(π_j)` with its PMF and CMF on `{0..m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiBin {
    pi: Vec<f64>,
    method: PoiBinMethod,
    pmf: Vec<f64>,
    cmf: Vec<f64>,
}

impl PoiBin {
    pub fn new(pi: Vec<f64>, method: PoiBinMethod) -> Result<Self> {
        if let Some(p) = pi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("success probability {p} outside [0, 1]")));
        }
        let method = method.resolve(pi.len());
        let pmf = match method {
            PoiBinMethod::ExactDp => exact_pmf(&pi),
            PoiBinMethod::Poisson => poisson_pmf(&pi),
            PoiBinMethod::Normal => normal_pmf(&pi),
            PoiBinMethod::BruteForce => brute_force_pmf(&pi)?,
            PoiBinMethod::Auto => unreachable!("resolved above"),
        };
        let mut acc = 0.0;
        let mut cmf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        // the support ends at m; approximations leave part of their mass beyond it
        *cmf.last_mut().expect("support is never empty") = 1.0;
        Ok(PoiBin { pi, method, pmf, cmf })
    }

    pub fn exact(pi: Vec<f64>) -> Result<Self> {
        Self::new(pi, PoiBinMethod::ExactDp)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn method(&self) -> PoiBinMethod {
        self.method
    }

    /// Number of trials `m`.
    pub fn trials(&self) -> usize {
        self.pi.len()
    }

    /// Masses on `{0..m}`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Cumulative masses on `{0..m}`.
    pub fn cmf_values(&self) -> &[f64] {
        &self.cmf
    }

    pub fn cmf(&self, y: usize) -> Result<f64> {
        self.cmf
            .get(y)
            .copied()
            .ok_or_else(|| Error::Domain(format!("{y} outside the support 0..={}", self.trials())))
    }

    /// `min{y : F(y) ≥ q}`.
    pub fn quantile(&self, q: f64) -> Result<usize> {
        quantile_from_cmf(&self.cmf, q)
    }

    pub fn mean(&self) -> f64 {
        self.pi.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.pi.iter().map(|p| p * (1.0 - p)).sum()
    }
}

/// `min{y : cmf[y] ≥ q}` for `q` in (0, 1); the last support point when
/// rounding keeps every value below `q`.
pub fn quantile_from_cmf(cmf: &[f64], q: f64) -> Result<usize> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level {q} outside (0, 1)")));
    }
    if cmf.is_empty() {
        return Err(Error::Domain("empty distribution".into()));
    }
    Ok(cmf.partition_point(|&f| f < q).min(cmf.len() - 1))
}

fn exact_pmf(pi: &[f64]) -> Vec<f64> {
    let m = pi.len();
    let mut f = vec![0.0; m + 1];
    f[0] = 1.0;
    for (j, &p) in pi.iter().enumerate() {
        let q = 1.0 - p;
        for k in (1..=j + 1).rev() {
            f[k] = f[k] * q + f[k - 1] * p;
        }
        f[0] *= q;
    }
    f
}

fn poisson_pmf(pi: &[f64]) -> Vec<f64> {
    let m = pi.len();
    let mu: f64 = pi.iter().sum();
    if mu == 0.0 {
        let mut f = vec![0.0; m + 1];
        f[0] = 1.0;
        return f;
    }
    let ln_mu = mu.ln();
    (0..=m)
        .map(|k| (k as f64 * ln_mu - mu - ln_gamma(k as f64 + 1.0)).exp())
        .collect()
}

fn normal_pmf(pi: &[f64]) -> Vec<f64> {
    let m = pi.len();
    let mu: f64 = pi.iter().sum();
    let sd = pi.iter().map(|p| p * (1.0 - p)).sum::<f64>().sqrt();
    if sd == 0.0 {
        let mut f = vec![0.0; m + 1];
        f[(mu.round() as usize).min(m)] = 1.0;
        return f;
    }
    let upper = |k: usize| {
        if k == m {
            1.0
        } else {
            norm_cdf((k as f64 + 0.5 - mu) / sd)
        }
    };
    (0..=m)
        .map(|k| upper(k) - if k == 0 { 0.0 } else { upper(k - 1) })
        .collect()
}

fn brute_force_pmf(pi: &[f64]) -> Result<Vec<f64>> {
    let m = pi.len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            m,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut f = vec![0.0; m + 1];
    for mask in 0u32..(1u32 << m) {
        let mut prob = 1.0;
        for (j, &p) in pi.iter().enumerate() {
            prob *= if mask >> j & 1 == 1 { p } else { 1.0 - p };
        }
        f[mask.count_ones() as usize] += prob;
    }
    Ok(f)
}
