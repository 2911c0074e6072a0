//! Experiment configuration: one JSON document per experiment.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::check::CheckSpec;
use crate::error::HarnessError;

/// Environment variable that replaces `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "STP_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub name: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub name: String,
}

impl Default for DistributionSpec {
    fn default() -> Self {
        Self {
            name: "unit_sphere".into(),
        }
    }
}

/// Starting point of every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Zeros,
    Point {
        values: Vec<f64>,
    },
    /// A point with `f = level`, for objectives that can construct one.
    Level {
        level: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub objective: ObjectiveSpec,
    pub solver: ComponentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ComponentSpec>,
    #[serde(default)]
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub init: InitSpec,
    pub trajectories: u64,
    pub iterations: u64,
    pub base_seed: u64,
    pub record_every: u64,
    pub output_dir: PathBuf,
    /// Checks run by `check`; empty means every applicable default.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and applies the output directory override.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            config.output_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let positive = [
            ("trajectories", self.trajectories),
            ("iterations", self.iterations),
            ("record_every", self.record_every),
        ];
        for (key, value) in positive {
            if value == 0 {
                return Err(HarnessError::invalid(key, "must be at least 1"));
            }
        }
        if self.objective.dim == 0 {
            return Err(HarnessError::invalid("objective.dim", "must be at least 1"));
        }
        Ok(())
    }

    /// Compact JSON with a fixed field order and sorted parameter maps.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match &self.schedule {
            Some(s) => format!("{}-{}", self.solver.name, s.name),
            None => self.solver.name.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "objective": {"name": "nesterov_chain", "dim": 500},
        "solver": {"name": "stp"},
        "schedule": {"name": "power", "params": {"exponent": 0.51, "alpha": 4}},
        "distribution": {"name": "unit_sphere"},
        "trajectories": 50,
        "iterations": 100000,
        "base_seed": 2024,
        "record_every": 100,
        "output_dir": "out/replica"
    }"#;

    #[test]
    fn round_trip_is_stable() {
        let config = ExperimentConfig::from_json(EXAMPLE).unwrap();
        let canonical = config.canonical_json();
        let again = ExperimentConfig::from_json(&canonical).unwrap();
        assert_eq!(again, config);
        assert_eq!(again.canonical_json(), canonical);
        assert_eq!(again.digest(), config.digest());
        assert_eq!(config.digest().len(), 64);
        // Parameter maps are sorted.
        assert!(canonical.find("\"alpha\"").unwrap() < canonical.find("\"exponent\"").unwrap());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = EXAMPLE.replace("\"trajectories\"", "\"trajectorys\": 1, \"trajectories\"");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn zero_counts_rejected() {
        let text = EXAMPLE.replace("\"record_every\": 100", "\"record_every\": 0");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("record_every"));
    }

    #[test]
    fn init_variants_parse() {
        let text = EXAMPLE.replace(
            "\"trajectories\"",
            "\"init\": {\"kind\": \"level\", \"level\": 1.0}, \"trajectories\"",
        );
        let config = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(config.init, InitSpec::Level { level: 1.0 });
        assert_eq!(
            ExperimentConfig::from_json(EXAMPLE).unwrap().init,
            InitSpec::Zeros
        );
    }
}
