//! Learning machinery: advantage estimation, the PPO clipped-surrogate
//! update, PPG's two-phase variant, and Adam.

mod adam;
mod buffer;
mod gae;
mod ppg;
mod ppo;

pub use adam::{clip_grad_norm, Adam};
pub use buffer::{RolloutBuffer, Segment};
pub use gae::{compute_gae, gae_1d, normalize_advantages};
pub use ppg::{aux_loss, ppg_auxiliary_phase, ppg_policy_phase, AuxSlab, AuxStore};
pub use ppo::{
    ppo_loss, ppo_update, recompute_recurrent_states, LossDiagnostics, PpoConfig, UpdateMetrics,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("rollout buffer is empty")]
    EmptyBuffer,
    #[error("non-finite loss encountered; update aborted and snapshot restored")]
    Divergence,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ppo,
    Ppg,
}

impl std::str::FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ppo" => Ok(Algo::Ppo),
            "ppg" => Ok(Algo::Ppg),
            other => Err(format!("unknown algo '{other}' (valid: ppo, ppg)")),
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algo::Ppo => "ppo",
            Algo::Ppg => "ppg",
        })
    }
}

/// PPG schedule knobs on top of the PPO update.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpgConfig {
    /// Policy phases per auxiliary phase.
    pub n_pi: usize,
    /// Optimization passes over the aux store (0 degrades PPG to PPO).
    pub aux_epochs: usize,
    /// Behavioral-cloning KL penalty coefficient.
    pub beta_clone: f64,
}

impl Default for PpgConfig {
    fn default() -> Self {
        PpgConfig {
            n_pi: 32,
            aux_epochs: 6,
            beta_clone: 1.0,
        }
    }
}

impl PpgConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.n_pi < 1 {
            return Err(LearnError::Config("n_pi must be >= 1".into()));
        }
        if self.beta_clone < 0.0 {
            return Err(LearnError::Config("beta_clone must be >= 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
