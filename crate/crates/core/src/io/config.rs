use std::path::Path;

use serde::{Deserialize, Serialize};

use super::synth::SynthConfig;
use crate::error::{Error, Result};
use crate::model::{EvoNetConfig, MessageKind};
use crate::recognition::RecognizerKind;
use crate::train::TrainConfig;

/// Everything a pipeline run needs, read from TOML. Missing keys take their
/// defaults; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub tau: usize,
    pub num_states: usize,
    pub recognizer: RecognizerKind,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub shapelet_candidates: usize,
    pub message_kind: MessageKind,
    pub attention_enabled: bool,
    pub u_size: usize,
    pub hg_size: usize,
    pub gat_epsilon: f64,
    /// Probability above which a prediction counts as an event.
    pub threshold: f64,
    pub train: TrainConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            tau: 8,
            num_states: 4,
            recognizer: RecognizerKind::Kmeans,
            kmeans_restarts: 10,
            kmeans_max_iter: 100,
            shapelet_candidates: 200,
            message_kind: MessageKind::Ggnn,
            attention_enabled: true,
            u_size: 32,
            hg_size: 32,
            gat_epsilon: crate::graph::DEFAULT_EPSILON,
            threshold: 0.5,
            train: TrainConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&super::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 || self.num_states == 0 {
            return Err(Error::invalid("tau and num_states must be at least 1"));
        }
        if self.kmeans_restarts == 0 || self.kmeans_max_iter == 0 {
            return Err(Error::invalid("kmeans_restarts and kmeans_max_iter must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(format!("threshold must be in [0, 1], got {}", self.threshold)));
        }
        self.network(1).validate()?;
        self.train.validate()?;
        self.synth.validate()
    }

    /// Network shape for series of dimension `dim`.
    pub fn network(&self, dim: usize) -> EvoNetConfig {
        EvoNetConfig {
            num_states: self.num_states,
            tau: self.tau,
            dim,
            u_size: self.u_size,
            hg_size: self.hg_size,
            message_kind: self.message_kind,
            attention_enabled: self.attention_enabled,
            gat_epsilon: self.gat_epsilon,
        }
    }
}
