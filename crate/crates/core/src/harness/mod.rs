//! Run orchestration: rollout collection, the train loop, evaluation over
//! full episodes, and bit-exact checkpoint/resume.

mod checkpoint;
mod collect;
mod eval;
mod train;

pub use checkpoint::{load, save, Checkpoint, CheckpointError, FORMAT_VERSION, MAGIC};
pub use collect::{Collector, EnvSlot};
pub use eval::{
    evaluate, evaluate_both, evaluate_factory, random_action_baseline, EvalMode, EvalReport,
    EvalSummary,
};
pub use train::{
    default_out_dir, params_from_checkpoint, policy_from_checkpoint, MetricsRow, Trainer,
};

use thiserror::Error;

use crate::learn::LearnError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests;
