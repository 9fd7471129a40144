//! Phasic policy gradient. The policy phase is a PPO update that also stages
//! (observations, returns, old-policy distribution parameters) into a replay
//! store; every n_pi phases the auxiliary phase distills the value targets
//! into the shared features under a KL leash to the pre-phase policy.

use rand::seq::SliceRandom;

use super::{clip_grad_norm, Adam, LearnError, PpgConfig, PpoConfig, RolloutBuffer, UpdateMetrics};
use crate::nets::{gaussian_kl, Policy, RecurrentState};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{Tape, Tensor};

/// One policy phase's worth of staged data.
pub struct AuxSlab {
    pub observations: Vec<f64>,
    pub returns: Vec<f64>,
    pub dones: Vec<bool>,
    /// Stored per-step states (recurrent policies only); sequence heads seed
    /// the auxiliary unrolls.
    pub states: Option<Vec<RecurrentState>>,
    /// Contiguous runs that never cross episode/segment boundaries.
    pub sequences: Vec<std::ops::Range<usize>>,
    /// pi_old distribution parameters: staged at policy-phase time and
    /// refreshed from the current policy when the auxiliary phase begins.
    pub old_means: Vec<f64>,
    pub old_log_std: Vec<f64>,
}

#[derive(Default)]
pub struct AuxStore {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub slabs: Vec<AuxSlab>,
}

impl AuxStore {
    pub fn new(obs_dim: usize, act_dim: usize) -> AuxStore {
        AuxStore {
            obs_dim,
            act_dim,
            slabs: Vec::new(),
        }
    }

    /// Total staged samples.
    pub fn len(&self) -> usize {
        self.slabs.iter().map(|s| s.returns.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.slabs.clear();
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AuxMetrics {
    /// Mean joint auxiliary loss over minibatches.
    pub aux_loss: f64,
    pub value_loss: f64,
    pub kl: f64,
    pub diverged: bool,
}

/// Evaluate pi's distribution parameters over a slab (no gradients).
fn distribution_snapshot(policy: &Policy, slab: &AuxSlab, obs_dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut tape = Tape::no_grad();
    let n = slab.returns.len();
    let mut means = vec![0.0; n * policy.act_dim()];
    match policy {
        Policy::Mlp(p) => {
            let obs = Tensor::new(vec![n, obs_dim], slab.observations.clone()).expect("obs");
            let (mean, _) = p.forward(&mut tape, &obs, false).expect("forward");
            means.copy_from_slice(&mean.data());
        }
        Policy::Lstm(p) => {
            let states = slab.states.as_ref().expect("recurrent slab needs states");
            for run in &slab.sequences {
                let rows: Vec<Vec<f64>> = run
                    .clone()
                    .map(|i| slab.observations[i * obs_dim..(i + 1) * obs_dim].to_vec())
                    .collect();
                let dones: Vec<bool> = run.clone().map(|i| slab.dones[i]).collect();
                let seq = p
                    .forward_sequence(&mut tape, &rows, &states[run.start], &dones, false)
                    .expect("forward");
                let md = seq.means.to_vec();
                let act = policy.act_dim();
                means[run.start * act..run.end * act].copy_from_slice(&md);
            }
        }
    }
    let log_std: Vec<f64> = policy.log_std().to_vec();
    (means, log_std)
}

/// Policy phase: identical to `ppo_update`, then stage the buffer (plus the
/// current distribution parameters) into the auxiliary store.
#[allow(clippy::too_many_arguments)]
pub fn ppg_policy_phase(
    policy: &Policy,
    buffer: &mut RolloutBuffer,
    cfg: &PpoConfig,
    adam: &mut Adam,
    run_seed: u64,
    update_index: u64,
    stale_hidden: bool,
    store: &mut AuxStore,
) -> Result<UpdateMetrics, LearnError> {
    let metrics = super::ppo_update(policy, buffer, cfg, adam, run_seed, update_index, stale_hidden)?;
    if metrics.diverged {
        return Ok(metrics);
    }
    let mut slab = AuxSlab {
        observations: buffer.observations.clone(),
        returns: buffer.returns.clone(),
        dones: buffer.dones.clone(),
        states: buffer.recurrent_states.clone(),
        sequences: buffer.sequences(),
        old_means: Vec::new(),
        old_log_std: Vec::new(),
    };
    let (means, log_std) = distribution_snapshot(policy, &slab, buffer.obs_dim);
    slab.old_means = means;
    slab.old_log_std = log_std;
    store.slabs.push(slab);
    Ok(metrics)
}

/// Joint auxiliary objective over one minibatch:
///   L = mean((V - returns)^2) + beta_clone * mean(KL(pi_old || pi_new))
/// with the value pathway wired through the shared torso.
pub fn aux_loss(
    tape: &mut Tape,
    policy: &Policy,
    mean: &Tensor,
    values: &Tensor,
    returns: &Tensor,
    old_means: &Tensor,
    old_log_std: &Tensor,
    beta_clone: f64,
) -> Result<(Tensor, f64, f64), LearnError> {
    let verr = tape.sub(values, returns)?;
    let vsq = tape.mul(&verr, &verr)?;
    let value_term = tape.mean(&vsq);
    let kl = gaussian_kl(tape, old_means, old_log_std, mean, policy.log_std())?;
    let kl_term = tape.affine(&kl, beta_clone, 0.0);
    let loss = tape.add(&value_term, &kl_term)?;
    Ok((loss, value_term.item(), kl.item()))
}

/// Auxiliary phase: refresh pi_old over the store, run `aux_epochs` passes of
/// value distillation + KL clamp, then clear the store. A non-finite loss
/// restores the pre-phase snapshot and flags divergence.
pub fn ppg_auxiliary_phase(
    policy: &Policy,
    store: &mut AuxStore,
    cfg: &PpoConfig,
    ppg: &PpgConfig,
    adam: &mut Adam,
    run_seed: u64,
    aux_round: u64,
) -> Result<AuxMetrics, LearnError> {
    if store.is_empty() {
        return Err(LearnError::EmptyBuffer);
    }
    if ppg.aux_epochs == 0 {
        store.clear();
        return Ok(AuxMetrics::default());
    }

    // pi_old is the policy right before this phase begins
    for i in 0..store.slabs.len() {
        let (means, log_std) = distribution_snapshot(policy, &store.slabs[i], store.obs_dim);
        store.slabs[i].old_means = means;
        store.slabs[i].old_log_std = log_std;
    }

    let snapshot = policy.to_data();
    let params = policy.param_tensors();
    let mut totals = AuxMetrics::default();
    let mut minibatches = 0usize;

    for epoch in 0..ppg.aux_epochs {
        let mut rng = stream_rng(run_seed, Stream::AuxShuffle(aux_round, epoch as u64));
        let plan = build_plan(policy, store, cfg, &mut rng);
        for mb in plan {
            let mut tape = Tape::new();
            let (loss, vl, kl) = eval_minibatch(&mut tape, policy, store, &mb, ppg.beta_clone)?;
            if !loss.item().is_finite() {
                policy.load_data(&snapshot).expect("snapshot restore");
                store.clear();
                log::warn!("auxiliary phase diverged (non-finite loss); snapshot restored");
                return Ok(AuxMetrics {
                    diverged: true,
                    ..AuxMetrics::default()
                });
            }
            policy.zero_grads();
            tape.backward(&loss)?;
            clip_grad_norm(&params, cfg.max_grad_norm);
            adam.step(&params, cfg.lr);
            totals.aux_loss += loss.item();
            totals.value_loss += vl;
            totals.kl += kl;
            minibatches += 1;
        }
    }
    if minibatches > 0 {
        totals.aux_loss /= minibatches as f64;
        totals.value_loss /= minibatches as f64;
        totals.kl /= minibatches as f64;
    }
    store.clear();
    Ok(totals)
}

/// Minibatch address: (slab index, rows or sequence range).
enum AuxPlan {
    Flat(Vec<(usize, usize)>),
    Sequence(usize, std::ops::Range<usize>),
}

fn build_plan(
    policy: &Policy,
    store: &AuxStore,
    cfg: &PpoConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<AuxPlan> {
    if policy.is_recurrent() {
        let mut seqs: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        for (si, slab) in store.slabs.iter().enumerate() {
            for run in &slab.sequences {
                let mut s = run.start;
                while s < run.end {
                    let e = (s + cfg.chunk_len).min(run.end);
                    seqs.push((si, s..e));
                    s = e;
                }
            }
        }
        seqs.shuffle(rng);
        seqs.into_iter().map(|(si, r)| AuxPlan::Sequence(si, r)).collect()
    } else {
        let mut rows: Vec<(usize, usize)> = store
            .slabs
            .iter()
            .enumerate()
            .flat_map(|(si, slab)| (0..slab.returns.len()).map(move |i| (si, i)))
            .collect();
        rows.shuffle(rng);
        rows.chunks(cfg.minibatch_size)
            .map(|c| AuxPlan::Flat(c.to_vec()))
            .collect()
    }
}

fn eval_minibatch(
    tape: &mut Tape,
    policy: &Policy,
    store: &AuxStore,
    plan: &AuxPlan,
    beta_clone: f64,
) -> Result<(Tensor, f64, f64), LearnError> {
    let (obs_dim, act_dim) = (store.obs_dim, store.act_dim);
    match plan {
        AuxPlan::Flat(rows) => {
            let b = rows.len();
            let mut obs = Vec::with_capacity(b * obs_dim);
            let mut rets = Vec::with_capacity(b);
            let mut old_means = Vec::with_capacity(b * act_dim);
            for &(si, i) in rows {
                let slab = &store.slabs[si];
                obs.extend_from_slice(&slab.observations[i * obs_dim..(i + 1) * obs_dim]);
                rets.push(slab.returns[i]);
                old_means.extend_from_slice(&slab.old_means[i * act_dim..(i + 1) * act_dim]);
            }
            let slab0 = &store.slabs[rows[0].0];
            let obs_t = Tensor::new(vec![b, obs_dim], obs).expect("obs");
            let ret_t = Tensor::new(vec![b, 1], rets).expect("returns");
            let om_t = Tensor::new(vec![b, act_dim], old_means).expect("old means");
            let ols_t = Tensor::new(vec![act_dim], slab0.old_log_std.clone()).expect("old ls");
            let (mean, values) = policy.forward_batch(tape, &obs_t, true)?;
            aux_loss(tape, policy, &mean, &values, &ret_t, &om_t, &ols_t, beta_clone)
        }
        AuxPlan::Sequence(si, range) => {
            let slab = &store.slabs[*si];
            let lstm = match policy {
                Policy::Lstm(p) => p,
                Policy::Mlp(_) => unreachable!(),
            };
            let rows: Vec<Vec<f64>> = range
                .clone()
                .map(|i| slab.observations[i * obs_dim..(i + 1) * obs_dim].to_vec())
                .collect();
            let dones: Vec<bool> = range.clone().map(|i| slab.dones[i]).collect();
            let init = &slab.states.as_ref().expect("states")[range.start];
            let seq = lstm.forward_sequence(tape, &rows, init, &dones, true)?;
            let rets: Vec<f64> = range.clone().map(|i| slab.returns[i]).collect();
            let ret_t = Tensor::new(vec![rets.len(), 1], rets).expect("returns");
            let oms: Vec<f64> = range
                .clone()
                .flat_map(|i| slab.old_means[i * act_dim..(i + 1) * act_dim].to_vec())
                .collect();
            let om_t = Tensor::new(vec![range.len(), act_dim], oms).expect("old means");
            let ols_t = Tensor::new(vec![act_dim], slab.old_log_std.clone()).expect("old ls");
            aux_loss(tape, policy, &seq.means, &seq.values, &ret_t, &om_t, &ols_t, beta_clone)
        }
    }
}
