//! Versioned TOML run configuration shared by all subcommands.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::bootstrap::BootstrapConfig;
use crate::error::{Error, Result};
use crate::fit::ModelSpec;
use crate::poibin::PoiBinMethod;
use crate::sim::{ModelUnderTest, ScenarioSpec};
use crate::survival::{Family, LinkScale};

pub const SCHEMA_VERSION: u32 = 1;

/// Interval procedure evaluated by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationModel {
    Oracle,
    Plugin,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Label of the study time unit; all times share it.
    #[serde(default = "default_time_unit")]
    pub time_unit: String,
    /// Trial CSV, relative to the configuration file.
    pub data: Option<PathBuf>,
    /// Calendar time of the interim cutoff on the entry-time scale.
    pub interim_time: Option<f64>,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default = "default_family")]
    pub family: Family,
    /// Link scale; the family's natural link when absent.
    pub link: Option<LinkScale>,
    /// Internal knots of a spline family, overriding the count in `family`.
    pub knots: Option<usize>,
    /// Candidates compared by `fit`; a default set when empty.
    #[serde(default)]
    pub compare: Vec<Family>,
    #[serde(default = "default_dropout_family")]
    pub dropout_family: Family,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub bootstrap_replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_poibin")]
    pub poibin_method: PoiBinMethod,
    /// Output directory; the command-line flag takes precedence.
    pub output: Option<PathBuf>,
    #[serde(default = "default_sim_model")]
    pub simulation_model: SimulationModel,
    #[serde(default)]
    pub scenario: Vec<ScenarioSpec>,
}

fn default_time_unit() -> String {
    "years".into()
}
fn default_family() -> Family {
    Family::Weibull
}
fn default_dropout_family() -> Family {
    Family::Exponential
}
fn default_alpha() -> f64 {
    0.05
}
fn default_replicates() -> usize {
    500
}
fn default_poibin() -> PoiBinMethod {
    PoiBinMethod::Auto
}
fn default_sim_model() -> SimulationModel {
    SimulationModel::Bootstrap
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves the data and output paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data = cfg.data.map(|p| base.join(p));
        cfg.output = cfg.output.map(|p| base.join(p));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.bootstrap_replicates == 0 {
            return Err(Error::Config("bootstrap_replicates must be at least 1".into()));
        }
        if let Some(h) = self.horizons.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(Error::Config(format!("horizon {h} must be positive")));
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("horizons must be strictly increasing".into()));
        }
        if let Some(t) = self.interim_time.filter(|t| !t.is_finite()) {
            return Err(Error::Config(format!("interim_time {t} is not finite")));
        }
        if self.knots.is_some() && !matches!(self.family, Family::RoystonParmar { .. }) {
            return Err(Error::Config("knots only applies to spline families".into()));
        }
        for s in &self.scenario {
            s.validate()?;
        }
        Ok(())
    }

    /// Event model requested by `family`, `link` and `knots`.
    pub fn event_spec(&self) -> ModelSpec {
        let family = match (self.family, self.knots) {
            (Family::RoystonParmar { .. }, Some(knots)) => Family::RoystonParmar { knots },
            (f, _) => f,
        };
        ModelSpec::new(family, self.link.unwrap_or(family.natural_link()))
    }

    /// Models compared by `fit`, each on its natural link.
    pub fn comparison_specs(&self) -> Vec<ModelSpec> {
        if self.compare.is_empty() {
            [
                Family::Exponential,
                Family::Weibull,
                Family::LogNormal,
                Family::LogLogistic,
                Family::GeneralizedGamma,
            ]
            .into_iter()
            .map(ModelSpec::natural)
            .collect()
        } else {
            self.compare.iter().copied().map(ModelSpec::natural).collect()
        }
    }

    pub fn bootstrap_config(&self, threads: Option<usize>) -> Result<BootstrapConfig> {
        let cfg = BootstrapConfig {
            replicates: self.bootstrap_replicates,
            alpha: self.alpha,
            master_seed: self.seed,
            poibin_method: self.poibin_method,
            threads,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn model_under_test(&self) -> ModelUnderTest {
        let event = self.event_spec();
        match self.simulation_model {
            SimulationModel::Oracle => ModelUnderTest::Oracle,
            SimulationModel::Plugin => ModelUnderTest::Plugin { event },
            SimulationModel::Bootstrap => ModelUnderTest::Bootstrap { event },
        }
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("`data` (trial CSV path) is required".into()))
    }

    pub fn interim(&self) -> Result<f64> {
        self.interim_time
            .ok_or_else(|| Error::Config("`interim_time` is required to read trial data".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_and_full_configs() {
        let c = RunConfig::from_toml("schema_version = 1").unwrap();
        assert_eq!(c.event_spec(), ModelSpec::natural(Family::Weibull));
        assert_eq!(c.comparison_specs().len(), 5);

        let c = RunConfig::from_toml(
            r#"
            schema_version = 1
            data = "trial.csv"
            interim_time = 4.5
            covariates = ["arm"]
            family = "rp2"
            link = "po"
            horizons = [0.5, 1.0, 1.5]
            seed = 9

            [[scenario]]
            study = "S2"
            t_c = 1.0
            dt = 1.0
            hr = 0.2
            p_censor_target = 0.2
            n = 100
            n_sim = 4
            b = 5
            "#,
        )
        .unwrap();
        assert_eq!(
            c.event_spec(),
            ModelSpec::new(Family::RoystonParmar { knots: 2 }, LinkScale::ProportionalOdds)
        );
        assert_eq!(c.scenario.len(), 1);
        assert_eq!(c.scenario[0].accrual_span, 3.0);
        // a spline family needs its knot count
        assert!(RunConfig::from_toml("schema_version = 1\nfamily = \"rp\"").is_err());
    }

    #[test]
    fn spline_knots_override() {
        let c = RunConfig::from_toml("schema_version = 1\nfamily = \"rp1\"\nknots = 3\nlink = \"po\"").unwrap();
        assert_eq!(
            c.event_spec(),
            ModelSpec::new(Family::RoystonParmar { knots: 3 }, LinkScale::ProportionalOdds)
        );
    }

    #[test]
    fn rejects_bad_values() {
        for body in [
            "schema_version = 2",
            "schema_version = 1\nhorizons = [1.0, 0.5]",
            "schema_version = 1\nhorizons = [1.0, 1.0]",
            "schema_version = 1\nhorizons = [-1.0]",
            "schema_version = 1\nalpha = 1.5",
            "schema_version = 1\nunknown_key = 3",
            "schema_version = 1\nfamily = \"weibull\"\nknots = 2",
        ] {
            assert!(matches!(RunConfig::from_toml(body), Err(Error::Config(_))), "{body}");
        }
    }
}
