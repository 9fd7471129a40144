//! The full training-run configuration and its canonical flat dump.
//!
//! The dump is the source of truth for reproducibility: its SHA-256 digest is
//! embedded in checkpoints, and feeding the dump back as a config file
//! reproduces the run.

use std::path::PathBuf;

use crate::envs::EnvName;
use crate::learn::{Algo, LearnError, PpgConfig, PpoConfig};
use crate::nets::PolicyKind;

pub const DEFAULT_TOTAL_TIMESTEPS: u64 = 1_000_000;
pub const DEFAULT_PARALLEL_ENVS: usize = 8;
pub const DEFAULT_CHECKPOINT_EVERY: u64 = 10;
pub const DEFAULT_EVAL_EPISODES: usize = 100;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub env: EnvName,
    pub algo: Algo,
    pub policy: PolicyKind,
    pub total_timesteps: u64,
    pub seed: u64,
    pub parallel_envs: usize,
    /// Checkpoint cadence in updates.
    pub checkpoint_every: u64,
    /// Keep collection-time recurrent states across epochs instead of
    /// recomputing them (reproduces the staleness failure mode).
    pub stale_hidden: bool,
    pub lstm_hidden: usize,
    pub eval_episodes: usize,
    /// Fan rollout collection out across one thread per environment.
    pub parallel_collect: bool,
    pub ppo: PpoConfig,
    pub ppg: PpgConfig,
    /// Where checkpoints/metrics land; not part of the resolved semantics.
    pub out_dir: Option<PathBuf>,
}

impl TrainConfig {
    pub fn new(env: EnvName, algo: Algo, policy: PolicyKind) -> TrainConfig {
        TrainConfig {
            env,
            algo,
            policy,
            total_timesteps: DEFAULT_TOTAL_TIMESTEPS,
            seed: 0,
            parallel_envs: DEFAULT_PARALLEL_ENVS,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            stale_hidden: false,
            lstm_hidden: crate::nets::LSTM_HIDDEN,
            eval_episodes: DEFAULT_EVAL_EPISODES,
            parallel_collect: true,
            ppo: PpoConfig::default(),
            ppg: PpgConfig::default(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        self.ppo.validate()?;
        self.ppg.validate()?;
        if self.parallel_envs == 0 {
            return Err(LearnError::Config("parallel_envs must be >= 1".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(LearnError::Config("checkpoint_every must be >= 1".into()));
        }
        if self.lstm_hidden == 0 {
            return Err(LearnError::Config("lstm_hidden must be >= 1".into()));
        }
        Ok(())
    }

    /// Environment steps consumed by one update.
    pub fn steps_per_update(&self) -> u64 {
        self.ppo.horizon as u64 * self.parallel_envs as u64
    }

    /// Updates the run will execute; a final partial update is dropped.
    pub fn total_updates(&self) -> u64 {
        self.total_timesteps / self.steps_per_update()
    }

    /// Canonical flat key=value dump. Key order is fixed; values use Rust's
    /// shortest-roundtrip float formatting, so parsing the dump recovers the
    /// exact configuration.
    pub fn resolved_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("env", self.env.to_string());
        kv("algo", self.algo.to_string());
        kv("policy", self.policy.to_string());
        kv("total_timesteps", self.total_timesteps.to_string());
        kv("seed", self.seed.to_string());
        kv("parallel_envs", self.parallel_envs.to_string());
        kv("checkpoint_every", self.checkpoint_every.to_string());
        kv("stale_hidden", self.stale_hidden.to_string());
        kv("lstm_hidden", self.lstm_hidden.to_string());
        kv("eval_episodes", self.eval_episodes.to_string());
        kv("parallel_collect", self.parallel_collect.to_string());
        kv("gamma", self.ppo.gamma.to_string());
        kv("lam", self.ppo.lam.to_string());
        kv("clip_eps", self.ppo.clip_eps.to_string());
        kv("lr", self.ppo.lr.to_string());
        kv("epochs", self.ppo.epochs.to_string());
        kv("minibatch_size", self.ppo.minibatch_size.to_string());
        kv("value_coef", self.ppo.value_coef.to_string());
        kv("entropy_coef", self.ppo.entropy_coef.to_string());
        kv("max_grad_norm", self.ppo.max_grad_norm.to_string());
        kv("horizon", self.ppo.horizon.to_string());
        kv("chunk_len", self.ppo.chunk_len.to_string());
        kv("n_pi", self.ppg.n_pi.to_string());
        kv("aux_epochs", self.ppg.aux_epochs.to_string());
        kv("beta_clone", self.ppg.beta_clone.to_string());
        s
    }

    /// SHA-256 of the resolved dump; the identity checkpoints carry.
    pub fn digest(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        Sha256::digest(self.resolved_text().as_bytes()).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_tracks_semantic_changes_only() {
        let mut a = TrainConfig::new(EnvName::Cartpole, Algo::Ppo, PolicyKind::Mlp);
        let b = a.clone();
        assert_eq!(a.digest(), b.digest());
        a.out_dir = Some(PathBuf::from("/tmp/x"));
        assert_eq!(a.digest(), b.digest(), "out_dir is not semantic");
        a.ppo.lr = 1e-3;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn update_accounting() {
        let mut c = TrainConfig::new(EnvName::Reach, Algo::Ppo, PolicyKind::Mlp);
        c.parallel_envs = 8;
        c.ppo.horizon = 2048;
        c.total_timesteps = 1_000_000;
        assert_eq!(c.steps_per_update(), 16384);
        assert_eq!(c.total_updates(), 61);
        c.total_timesteps = 16383;
        assert_eq!(c.total_updates(), 0, "final partial update dropped");
    }
}
