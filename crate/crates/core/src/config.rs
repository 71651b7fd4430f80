//! JSON experiment configuration.
//!
//! One document drives every subcommand; each subcommand reads the sections it
//! needs and reports the first missing or invalid one by its dotted path.
//! Unknown keys are rejected everywhere and `seed` is mandatory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ergodics::{
    InitialCondition, MinorizationChain, Observable, Probe, TvOptions, VerifyOptions,
};
use crate::kernels::{Kernel, KernelError, KernelSpec};
use crate::optimizer::{KwConfig, ThresholdBox};
use crate::trading::{ObjectiveSpec, DEFAULT_MAX_STEPS};
use crate::walk::{Boundary, Side, Thresholds, WalkPath};

#[derive(Debug, Error, PartialEq)]
#[error("invalid config: {field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Fixed increments used instead of a simulated path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<Fixture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdsConfig>,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub side: Side,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv: Option<TvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lln: Option<LlnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minorization: Option<MinorizationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trading: Option<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    #[serde(default)]
    pub s0: f64,
    pub increments: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

/// Simulated path for `simulate`, `crossings` and `overshoot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub n_steps: usize,
    #[serde(default)]
    pub s0: f64,
    #[serde(default)]
    pub x0: f64,
    /// Comparison used for the overshoot chain.
    #[serde(default)]
    pub overshoot_boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvConfig {
    pub chain: crate::ergodics::Chain,
    pub init: [InitialCondition; 2],
    pub n_list: Vec<u64>,
    pub replicates: usize,
    #[serde(default)]
    pub options: TvOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlnConfig {
    pub observable: Observable,
    pub n_cycles: usize,
    #[serde(default = "default_lln_steps")]
    pub max_steps: u64,
}

fn default_lln_steps() -> u64 {
    100 * DEFAULT_MAX_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinorizationConfig {
    pub chain: MinorizationChain,
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub options: VerifyOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub n_cycles: usize,
    #[serde(default = "default_objective_steps")]
    pub max_steps: u64,
}

fn default_objective_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ThresholdBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kw: Option<KwConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<(f64, f64)>,
}

fn kernel_error(e: KernelError) -> ConfigError {
    match e {
        KernelError::InvalidSpec { field, reason } => ConfigError::new(format!("kernel.{field}"), reason),
        other => ConfigError::new("kernel", other.to_string()),
    }
}

fn missing(field: &str) -> ConfigError {
    ConfigError::new(field, "section is required by this subcommand")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = ["missing field `", "unknown field `"]
                .iter()
                .find_map(|p| msg.split(p).nth(1).and_then(|r| r.split('`').next()))
                .unwrap_or("config");
            ConfigError::new(field, msg.clone())
        })
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| ConfigError::new("config", format!("not UTF-8: {e}")))?;
        Ok((Self::from_json(text)?, bytes))
    }

    pub fn kernel(&self) -> Result<Kernel, ConfigError> {
        let spec = self.kernel.ok_or_else(|| missing("kernel"))?;
        Kernel::new(spec).map_err(kernel_error)
    }

    pub fn thresholds(&self) -> Result<Thresholds, ConfigError> {
        let t = self.thresholds.ok_or_else(|| missing("thresholds"))?;
        Thresholds::new(t.lower, t.upper, t.boundary)
            .map_err(|e| ConfigError::new("thresholds", e.to_string()))
    }

    pub fn path_section(&self) -> Result<PathConfig, ConfigError> {
        let p = self.path.ok_or_else(|| missing("path"))?;
        if p.n_steps == 0 {
            return Err(ConfigError::new("path.n_steps", "must be at least 1"));
        }
        Ok(p)
    }

    /// The fixture path if present, otherwise a simulated one.
    pub fn walk_path(&self) -> Result<WalkPath, ConfigError> {
        if let Some(f) = &self.fixture {
            if f.increments.is_empty() {
                return Err(ConfigError::new("fixture.increments", "must not be empty"));
            }
            if let Some(i) = f.increments.iter().position(|x| !x.is_finite()) {
                return Err(ConfigError::new(
                    format!("fixture.increments[{i}]"),
                    "must be finite",
                ));
            }
            return Ok(WalkPath::from_increments(f.s0, f.increments.clone()));
        }
        let kernel = self.kernel()?;
        let p = self.path_section()?;
        crate::walk::simulate_path(&kernel, p.s0, p.x0, p.n_steps, self.seed)
            .map_err(|e| ConfigError::new("path", e.to_string()))
    }

    pub fn trading(&self) -> Result<ObjectiveSpec, ConfigError> {
        let spec = self.trading.ok_or_else(|| missing("trading"))?;
        spec.validate()
            .map_err(|e| ConfigError::new("trading", e.to_string()))?;
        Ok(spec)
    }

    /// Replaces every step budget in the document.
    pub fn override_max_steps(&mut self, steps: u64) {
        if let Some(tv) = &mut self.tv {
            tv.options.max_steps_per_replicate = steps;
        }
        if let Some(l) = &mut self.lln {
            l.max_steps = steps;
        }
        if let Some(m) = &mut self.minorization {
            m.options.max_steps_per_cycle = steps;
        }
        if let Some(o) = &mut self.objective {
            o.max_steps = steps;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "seed": 7,
        "kernel": {"family": "state_shape", "alpha": 0.3, "h": 0.2, "m": 1.0},
        "thresholds": {"lower": -0.5, "upper": 0.5}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        assert!(c.kernel().is_ok());
        assert_eq!(c.thresholds().unwrap().boundary(), Boundary::Strict);
        assert_eq!(c.side, Side::Long);
    }

    #[test]
    fn missing_seed_is_named() {
        let err = ExperimentConfig::from_json(r#"{"mu": 0.0}"#).unwrap_err();
        assert_eq!(err.field, "seed");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_json(r#"{"seed": 1, "sede": 2}"#).unwrap_err();
        assert_eq!(err.field, "sede");
    }

    #[test]
    fn kernel_errors_carry_the_field_path() {
        let text = MINIMAL.replace("0.3", "1.5");
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.kernel().unwrap_err().field, "kernel.alpha");
    }

    #[test]
    fn missing_sections_are_named() {
        let c = ExperimentConfig::from_json(r#"{"seed": 1}"#).unwrap();
        assert_eq!(c.kernel().unwrap_err().field, "kernel");
        assert_eq!(c.thresholds().unwrap_err().field, "thresholds");
        assert_eq!(c.walk_path().unwrap_err().field, "kernel");
        assert_eq!(c.trading().unwrap_err().field, "trading");
    }

    #[test]
    fn fixture_takes_precedence() {
        let c = ExperimentConfig::from_json(
            r#"{"seed": 1, "fixture": {"increments": [-1.5, 2.6]}}"#,
        )
        .unwrap();
        let p = c.walk_path().unwrap();
        assert_eq!(p.partial_sums, vec![-1.5, -1.5 + 2.6]);
    }

    #[test]
    fn roundtrip_preserves_document() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }
}
