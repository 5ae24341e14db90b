//! Versioned run configuration covering scene, training, evaluation,
//! quantization and profiling. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::SceneConfig;
use crate::profile::EnergyModel;
use crate::rl::TrainConfig;
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Evaluation episode k uses seed `seed + k`.
    pub seed: u64,
    /// Decision cap per evaluation episode.
    pub max_interactions: usize,
    /// Minimum success rate for a zero exit status.
    pub min_success_rate: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 50, seed: 1_000_000, max_interactions: 600, min_success_rate: 0.9 }
    }
}

impl EvalConfig {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.episodes as u64).map(|k| self.seed + k).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantConfig {
    pub bits: u32,
    /// Largest tolerated |success-rate delta| for a zero exit status.
    pub max_success_delta: f64,
    /// States sampled from evaluation rollouts for the action comparison.
    pub compare_states: usize,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self { bits: 9, max_success_delta: 0.05, compare_states: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub energy: EnergyModel,
    pub repetitions: usize,
    pub warmup: usize,
    /// Largest tolerated mean latency for a zero exit status, ms.
    pub max_latency_ms: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { energy: EnergyModel::default(), repetitions: 1000, warmup: 50, max_latency_ms: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub scene: SceneConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub quant: QuantConfig,
    pub profile: ProfileConfig,
}

impl Default for RunConfig {
    /// Desk-scale defaults on the planar scene.
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            scene: SceneConfig::planar(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            quant: QuantConfig::default(),
            profile: ProfileConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("config version {} is not supported (expected {CONFIG_VERSION})", self.version)));
        }
        self.scene.validate()?;
        self.train.validate()?;
        self.profile.energy.validate()?;
        if self.eval.max_interactions == 0 {
            return Err(Error::Config("eval.max_interactions must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
