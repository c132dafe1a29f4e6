//! Run configuration shared by every subcommand, and the envelope written
//! around every result artifact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::experiment::ClassifyConfig;
use crate::disagg::DisaggConfig;
use crate::error::{Error, Result};
use crate::events::EventPipelineConfig;
use crate::occupancy::ExperimentConfig;

pub const DEFAULT_SEED: u64 = 7;

/// Every tunable of a run. Missing fields take their defaults.
///
/// `seed` and `events` are the single source of truth: [`RunConfig::resolve`]
/// copies them into the nested sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub events: EventPipelineConfig,
    pub occupancy: ExperimentConfig,
    pub disagg: DisaggConfig,
    pub classify: ClassifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            events: EventPipelineConfig::default(),
            occupancy: ExperimentConfig::default(),
            disagg: DisaggConfig::default(),
            classify: ClassifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Propagates `seed` and `events` into every section.
    pub fn resolve(mut self) -> Self {
        let seed = self.seed;
        self.occupancy.pipeline = self.events;
        self.occupancy.forest.seed = seed;
        self.disagg.seed = seed;
        self.disagg.hart.events = self.events;
        self.classify.seed = seed;
        self.classify.forest.seed = seed;
        self.classify.disagg = self.disagg;
        self
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A result document: provenance header plus the payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub results: T,
}

impl<T: Serialize> Artifact<T> {
    pub fn new(command: &str, config: &RunConfig, results: T) -> Self {
        Self {
            tool: "disagg".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
            results,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 3, "occupancy": {"knn_k": 9}}"#).unwrap();
        let c = c.resolve();
        assert_eq!(c.occupancy.knn_k, 9);
        assert_eq!(c.occupancy.occupancy.window_s, 900);
        assert_eq!(c.classify.forest.seed, 3);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 3}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
