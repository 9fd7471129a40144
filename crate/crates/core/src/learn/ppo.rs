//! PPO: clipped-surrogate policy loss, value regression on detached torso
//! features, entropy bonus, and the epoch/minibatch update loop. Recurrent
//! policies train on whole contiguous sequences with hidden states
//! recomputed fresh from stored initial states at the start of every epoch.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{clip_grad_norm, normalize_advantages, Adam, LearnError, RolloutBuffer};
use crate::nets::{entropy, log_prob_batch, Policy};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{Tape, Tensor};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpoConfig {
    /// Discount factor in (0, 1].
    pub gamma: f64,
    /// GAE exponential weight in [0, 1].
    pub lam: f64,
    /// Clip range for the probability ratio; must be < 1.
    pub clip_eps: f64,
    pub lr: f64,
    /// Optimization passes over each collected buffer.
    pub epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Collection steps per env per update.
    pub horizon: usize,
    /// Max recurrent sequence length per minibatch.
    pub chunk_len: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lam: 0.95,
            clip_eps: 0.2,
            lr: 3e-4,
            epochs: 10,
            minibatch_size: 64,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            horizon: 2048,
            chunk_len: 200,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |msg: &str| Err(LearnError::Config(msg.into()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lam) {
            return bad("lam must be in [0, 1]");
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("clip_eps must be in (0, 1)");
        }
        if self.lr <= 0.0 || self.value_coef < 0.0 || self.entropy_coef < 0.0 {
            return bad("lr must be > 0 and loss coefficients >= 0");
        }
        if self.minibatch_size == 0 || self.horizon == 0 || self.chunk_len == 0 {
            return bad("minibatch_size, horizon, chunk_len must be positive");
        }
        if self.max_grad_norm <= 0.0 {
            return bad("max_grad_norm must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Fraction of samples whose ratio left the clip band.
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

#[derive(Debug, Clone, Default)]
pub struct UpdateMetrics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    /// True when a non-finite loss aborted the update and the pre-update
    /// parameter snapshot was restored.
    pub diverged: bool,
}

/// Constant (no-gradient) views of one minibatch.
struct BatchData {
    actions: Tensor,
    old_log_probs: Tensor,
    advantages: Tensor,
    returns: Tensor,
}

impl BatchData {
    fn gather(buffer: &RolloutBuffer, indices: &[usize]) -> BatchData {
        let b = indices.len();
        let act_dim = buffer.act_dim;
        let mut actions = Vec::with_capacity(b * act_dim);
        let mut old_logp = Vec::with_capacity(b);
        let mut returns = Vec::with_capacity(b);
        let mut advantages = Vec::with_capacity(b);
        for &i in indices {
            actions.extend_from_slice(buffer.action_row(i));
            old_logp.push(buffer.log_probs[i]);
            returns.push(buffer.returns[i]);
            advantages.push(buffer.advantages[i]);
        }
        let advantages = normalize_advantages(&advantages);
        BatchData {
            actions: Tensor::new(vec![b, act_dim], actions).expect("actions"),
            old_log_probs: Tensor::new(vec![b], old_logp).expect("old_logp"),
            advantages: Tensor::new(vec![b], advantages).expect("advantages"),
            returns: Tensor::new(vec![b, 1], returns).expect("returns"),
        }
    }
}

/// Clipped-surrogate loss given the network outputs for one minibatch:
///   L = -mean(min(rho A, clip(rho) A))
///       + value_coef * mean((V - returns)^2)
///       - entropy_coef * entropy
fn loss_core(
    tape: &mut Tape,
    policy: &Policy,
    mean: &Tensor,
    values: &Tensor,
    batch: &BatchData,
    cfg: &PpoConfig,
) -> Result<(Tensor, LossDiagnostics), LearnError> {
    let new_logp = log_prob_batch(tape, mean, policy.log_std(), &batch.actions)?;
    let delta = tape.sub(&new_logp, &batch.old_log_probs)?;
    let ratio = tape.exp(&delta);
    let surr1 = tape.mul(&ratio, &batch.advantages)?;
    let clipped = tape.clamp(&ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    let surr2 = tape.mul(&clipped, &batch.advantages)?;
    let pessimistic = tape.minimum(&surr1, &surr2)?;
    let mean_surr = tape.mean(&pessimistic);
    let policy_term = tape.neg(&mean_surr);

    let verr = tape.sub(values, &batch.returns)?;
    let vsq = tape.mul(&verr, &verr)?;
    let value_mse = tape.mean(&vsq);
    let value_term = tape.affine(&value_mse, cfg.value_coef, 0.0);

    let ent = entropy(tape, policy.log_std());
    let ent_term = tape.affine(&ent, -cfg.entropy_coef, 0.0);

    let pv = tape.add(&policy_term, &value_term)?;
    let loss = tape.add(&pv, &ent_term)?;

    let diagnostics = {
        let rd = ratio.data();
        let n = rd.len() as f64;
        let clip_fraction =
            rd.iter().filter(|&&r| (r - 1.0).abs() > cfg.clip_eps).count() as f64 / n;
        let approx_kl = rd.iter().map(|&r| r - 1.0 - r.ln()).sum::<f64>() / n;
        LossDiagnostics {
            policy_loss: policy_term.item(),
            value_loss: value_mse.item(),
            entropy: ent.item(),
            clip_fraction,
            approx_kl,
        }
    };
    Ok((loss, diagnostics))
}

/// PPO loss over an explicit index set (feed-forward path).
pub fn ppo_loss(
    tape: &mut Tape,
    policy: &Policy,
    buffer: &RolloutBuffer,
    indices: &[usize],
    cfg: &PpoConfig,
) -> Result<(Tensor, LossDiagnostics), LearnError> {
    let rows: Vec<f64> = indices.iter().flat_map(|&i| buffer.obs_row(i).to_vec()).collect();
    let obs = Tensor::new(vec![indices.len(), buffer.obs_dim], rows).expect("obs");
    let batch = BatchData::gather(buffer, indices);
    let (mean, values) = policy.forward_batch(tape, &obs, true)?;
    loss_core(tape, policy, &mean, &values, &batch, cfg)
}

/// PPO loss over one contiguous recurrent chunk, unrolled from the stored
/// (refreshed) state at its head.
fn ppo_loss_sequence(
    tape: &mut Tape,
    policy: &Policy,
    buffer: &RolloutBuffer,
    range: std::ops::Range<usize>,
    cfg: &PpoConfig,
) -> Result<(Tensor, LossDiagnostics), LearnError> {
    let lstm = match policy {
        Policy::Lstm(p) => p,
        Policy::Mlp(_) => unreachable!("sequence path is recurrent-only"),
    };
    let states = buffer.recurrent_states.as_ref().expect("recurrent buffer");
    let init = states[range.start].clone();
    let obs: Vec<Vec<f64>> = range.clone().map(|i| buffer.obs_row(i).to_vec()).collect();
    let dones: Vec<bool> = range.clone().map(|i| buffer.dones[i]).collect();
    let indices: Vec<usize> = range.collect();
    let batch = BatchData::gather(buffer, &indices);
    let seq = lstm.forward_sequence(tape, &obs, &init, &dones, true)?;
    loss_core(tape, policy, &seq.means, &seq.values, &batch, cfg)
}

/// Re-unroll the current-parameter LSTM over every stored sequence, replacing
/// the per-step states captured at collection time. Sequences that begin
/// after a terminal step restart from the zero state; a segment head that
/// continues an episode keeps its stored boundary state as the entry point.
pub fn recompute_recurrent_states(policy: &Policy, buffer: &mut RolloutBuffer) {
    let lstm = match policy {
        Policy::Lstm(p) => p,
        Policy::Mlp(_) => return,
    };
    let runs = buffer.sequences();
    let states = match buffer.recurrent_states.as_mut() {
        Some(s) => s,
        None => return,
    };
    let mut tape = Tape::no_grad();
    for run in runs {
        let mut state = states[run.start].clone();
        for i in run {
            states[i] = state.clone();
            let obs = &buffer.observations[i * buffer.obs_dim..(i + 1) * buffer.obs_dim];
            let (_, next) = lstm.step(&mut tape, obs, &state).expect("recompute step");
            state = next;
        }
    }
}

/// Zero every stored recurrent state that sits right after a terminal step
/// (and every segment head that starts an episode); invariant guard used by
/// tests and the collector.
pub(crate) fn boundary_states_zeroed(buffer: &RolloutBuffer) -> bool {
    let states = match buffer.recurrent_states.as_ref() {
        Some(s) => s,
        None => return true,
    };
    buffer.segments.iter().all(|seg| {
        (seg.start..seg.start + seg.len - 1)
            .filter(|&i| buffer.dones[i])
            .all(|i| states[i + 1].is_zero())
    })
}

/// One PPO update: `epochs` shuffled passes over the buffer. Feed-forward
/// policies use flat index minibatches; recurrent ones use whole contiguous
/// chunks with per-epoch fresh state recomputation (unless `stale_hidden`).
/// A non-finite loss restores the pre-update snapshot and flags divergence.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    policy: &Policy,
    buffer: &mut RolloutBuffer,
    cfg: &PpoConfig,
    adam: &mut Adam,
    run_seed: u64,
    update_index: u64,
    stale_hidden: bool,
) -> Result<UpdateMetrics, LearnError> {
    if buffer.is_empty() {
        return Err(LearnError::EmptyBuffer);
    }
    debug_assert_eq!(buffer.advantages.len(), buffer.len(), "run compute_gae first");
    let snapshot = policy.to_data();
    let params = policy.param_tensors();
    let mut totals = UpdateMetrics::default();
    let mut minibatches = 0usize;

    for epoch in 0..cfg.epochs {
        if policy.is_recurrent() && !stale_hidden {
            recompute_recurrent_states(policy, buffer);
        }
        let mut rng = stream_rng(run_seed, Stream::Shuffle(update_index, epoch as u64));

        let plan: Vec<MinibatchPlan> = if policy.is_recurrent() {
            let mut chunks = buffer.chunks(cfg.chunk_len);
            chunks.shuffle(&mut rng);
            chunks.into_iter().map(MinibatchPlan::Sequence).collect()
        } else {
            let mut indices: Vec<usize> = (0..buffer.len()).collect();
            indices.shuffle(&mut rng);
            indices
                .chunks(cfg.minibatch_size)
                .map(|c| MinibatchPlan::Flat(c.to_vec()))
                .collect()
        };

        for mb in plan {
            let mut tape = Tape::new();
            let (loss, diag) = match mb {
                MinibatchPlan::Flat(indices) => ppo_loss(&mut tape, policy, buffer, &indices, cfg)?,
                MinibatchPlan::Sequence(range) => {
                    ppo_loss_sequence(&mut tape, policy, buffer, range, cfg)?
                }
            };
            if !loss.item().is_finite() {
                policy.load_data(&snapshot).expect("snapshot restore");
                log::warn!("divergence at update {update_index}: non-finite loss; snapshot restored");
                return Ok(UpdateMetrics {
                    diverged: true,
                    ..UpdateMetrics::default()
                });
            }
            policy.zero_grads();
            tape.backward(&loss)?;
            let norm = clip_grad_norm(&params, cfg.max_grad_norm);
            adam.step(&params, cfg.lr);

            totals.policy_loss += diag.policy_loss;
            totals.value_loss += diag.value_loss;
            totals.entropy += diag.entropy;
            totals.clip_fraction += diag.clip_fraction;
            totals.approx_kl += diag.approx_kl;
            totals.grad_norm += norm;
            minibatches += 1;
        }
    }

    if minibatches > 0 {
        let n = minibatches as f64;
        totals.policy_loss /= n;
        totals.value_loss /= n;
        totals.entropy /= n;
        totals.clip_fraction /= n;
        totals.approx_kl /= n;
        totals.grad_norm /= n;
    }
    Ok(totals)
}

enum MinibatchPlan {
    Flat(Vec<usize>),
    Sequence(std::ops::Range<usize>),
}
