//! Desk-scale deep reinforcement learning lab.
//!
//! The pieces, bottom up:
//! - [`tensor`]: dense f64 arrays with reverse-mode autodiff on a dynamic tape
//! - [`nets`]: MLP and LSTM policy/value networks with a diagonal-Gaussian head
//! - [`learn`]: GAE, PPO clipped-surrogate updates, PPG two-phase training, Adam
//! - [`envs`]: cart-pole plus planar-arm reach/feeding/bathing/scratching tasks
//! - [`harness`]: rollout collection, the train loop, evaluation, checkpoints

pub mod config;
pub mod envs;
pub mod gradcheck;
pub mod harness;
pub mod learn;
pub mod nets;
pub mod rng;
pub mod tensor;
