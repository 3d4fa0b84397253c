//! Experiment configuration file.

use std::path::{Path, PathBuf};

use nested_growth::asymptotics::{LimitLaw, Rate};
use nested_growth::process::{Guards, ModelParams};
use nested_growth::regimes::{parse_exponent, Exponent, ScalingFamily};
use nested_growth::stats::{Target, ValidationConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySection>,
    /// Explicit law for `sigma_K`, overriding the regime's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LimitLaw>,
    /// `beta` index used to rescale `sigma_K` when no family is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_beta_index: Option<usize>,
    pub run: RunSection,
    #[serde(default)]
    pub targets: Vec<Target>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub alpha: f64,
    pub mu: Vec<f64>,
    #[serde(rename = "K")]
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub a: Vec<String>,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Rate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub guards: Option<Guards>,
    #[serde(default = "default_threshold")]
    pub ks_threshold: f64,
    /// 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

fn default_threshold() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.model.mu.len() < self.model.target {
            return Err(CliError::Usage(format!(
                "model.mu has {} entries but model.K is {}",
                self.model.mu.len(),
                self.model.target
            )));
        }
        self.params()?;
        self.family()?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        ModelParams::new(m.d, m.side, m.alpha, m.mu.clone(), m.target).map_err(|e| CliError::Usage(format!("model: {e}")))
    }

    pub fn family(&self) -> Result<Option<ScalingFamily>, CliError> {
        let Some(f) = &self.family else {
            return Ok(None);
        };
        let a = f
            .a
            .iter()
            .map(|s| parse_exponent(s))
            .collect::<Result<Vec<Exponent>, _>>()
            .map_err(|e| CliError::Usage(format!("family.a: {e}")))?;
        let b = parse_exponent(&f.b).map_err(|e| CliError::Usage(format!("family.b: {e}")))?;
        let mut family =
            ScalingFamily::new(self.model.d, self.model.target, a, b).map_err(|e| CliError::Usage(format!("family: {e}")))?;
        if let Some(c) = &f.c {
            family = family.with_limits(c.clone()).map_err(|e| CliError::Usage(format!("family.c: {e}")))?;
        }
        Ok(Some(family))
    }

    pub fn guards(&self) -> Guards {
        self.run.guards.unwrap_or_default()
    }

    pub fn validation(&self) -> Result<ValidationConfig, CliError> {
        let mut v = ValidationConfig::new(self.params()?, self.run.replicates, self.run.master_seed, self.targets.clone());
        v.family = self.family()?;
        v.law = self.law.clone();
        v.scale_beta_index = self.scale_beta_index;
        v.ks_threshold = self.run.ks_threshold;
        v.workers = self.run.workers;
        v.guards = self.guards();
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAST_FOLLOWERS: &str = r#"{
        "model": {"d": 1, "L": 10000, "alpha": 10000, "mu": [0.01, 100], "K": 2},
        "family": {"a": ["-1/2", "1/2"], "b": "1"},
        "run": {"replicates": 5000, "master_seed": 7},
        "targets": [{"kind": "sigma_k_law"}, {"kind": "distance_law", "j": 1, "k": 2}],
        "output": {"dir": "out", "formats": ["csv", "json"]}
    }"#;

    #[test]
    fn parses_full_config() {
        let c = ExperimentConfig::parse(FAST_FOLLOWERS).unwrap();
        assert_eq!(c.model.target, 2);
        assert_eq!(c.targets.len(), 2);
        let f = c.family().unwrap().unwrap();
        assert_eq!(f.a[0], Exponent::new(-1, 2));
        let v = c.validation().unwrap();
        assert_eq!(v.replicates, 5000);
        assert_eq!(v.ks_threshold, 0.05);
    }

    #[test]
    fn rejects_unknown_and_missing_keys() {
        let unknown = FAST_FOLLOWERS.replace("\"alpha\"", "\"alhpa\"");
        let err = ExperimentConfig::parse(&unknown).unwrap_err().to_string();
        assert!(err.contains("alhpa") && err.contains("line"), "{err}");
        let missing = FAST_FOLLOWERS.replace("\"mu\": [0.01, 100], ", "");
        let err = ExperimentConfig::parse(&missing).unwrap_err().to_string();
        assert!(err.contains("mu"), "{err}");
        let bad_target = FAST_FOLLOWERS.replace("\"j\": 1", "\"i\": 1");
        assert!(ExperimentConfig::parse(&bad_target).is_err());
    }

    #[test]
    fn rejects_short_rate_list_and_bad_exponents() {
        let short = FAST_FOLLOWERS.replace("[0.01, 100]", "[0.01]");
        assert!(ExperimentConfig::parse(&short).unwrap_err().to_string().contains("model.K"));
        let bad = FAST_FOLLOWERS.replace("\"-1/2\"", "\"1//2\"");
        assert!(ExperimentConfig::parse(&bad).unwrap_err().to_string().contains("family.a"));
    }

    #[test]
    fn limits_accept_infinity() {
        let with_c = FAST_FOLLOWERS.replace("\"b\": \"1\"", "\"b\": \"1\", \"c\": [1, \"inf\"]");
        let c = ExperimentConfig::parse(&with_c).unwrap();
        assert_eq!(c.family().unwrap().unwrap().c, Some(vec![Rate::Finite(1.0), Rate::Infinite]));
    }
}
