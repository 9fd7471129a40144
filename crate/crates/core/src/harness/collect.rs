//! Rollout collection. Every random draw is addressed by
//! (run seed, env index, per-env counters), so one-thread-per-env collection
//! and plain sequential collection produce byte-identical buffers.

use std::collections::VecDeque;

use crate::envs::{make_env, Env, EnvName};
use crate::learn::RolloutBuffer;
use crate::nets::{sample_and_log_prob, ParamsData, Policy, RecurrentState};
use crate::rng::{standard_normal, stream_rng, Stream};
use crate::tensor::Tape;

/// Rolling window for the reported mean episode reward.
const REWARD_WINDOW: usize = 100;

/// Per-env mutable collection state that survives across updates.
pub struct EnvSlot {
    pub env: Box<dyn Env>,
    pub obs: Vec<f64>,
    pub state: Option<RecurrentState>,
    /// Episodes started so far (addresses reset streams).
    pub episode_index: u64,
    /// Total env steps taken so far (addresses noise streams).
    pub step_count: u64,
    /// Reward accumulated in the in-flight episode.
    pub episode_reward: f64,
}

pub struct Collector {
    pub run_seed: u64,
    pub slots: Vec<EnvSlot>,
    /// Rewards of the last `REWARD_WINDOW` finished episodes, oldest first.
    pub finished: VecDeque<f64>,
    pub parallel: bool,
}

impl Collector {
    pub fn new(
        env_name: EnvName,
        n_envs: usize,
        run_seed: u64,
        recurrent_hidden: Option<usize>,
        parallel: bool,
    ) -> Collector {
        let slots = (0..n_envs)
            .map(|e| {
                let mut env = make_env(env_name);
                let obs = env.reset(reset_seed(run_seed, e as u64, 0));
                EnvSlot {
                    env,
                    obs,
                    state: recurrent_hidden.map(RecurrentState::zeros),
                    episode_index: 0,
                    step_count: 0,
                    episode_reward: 0.0,
                }
            })
            .collect();
        Collector {
            run_seed,
            slots,
            finished: VecDeque::new(),
            parallel,
        }
    }

    pub fn rolling_mean_reward(&self) -> Option<f64> {
        if self.finished.is_empty() {
            return None;
        }
        Some(self.finished.iter().sum::<f64>() / self.finished.len() as f64)
    }

    /// One horizon of experience from every env, as env-major segments.
    pub fn collect(&mut self, policy: &Policy, horizon: usize) -> RolloutBuffer {
        let run_seed = self.run_seed;
        let mut finished_per_env: Vec<Vec<f64>>;
        let mut combined = RolloutBuffer::new(
            policy.obs_dim(),
            policy.act_dim(),
            policy.is_recurrent(),
        );

        if self.parallel && self.slots.len() > 1 {
            let snapshot = policy.to_data();
            let results: Vec<(RolloutBuffer, Vec<f64>)> = std::thread::scope(|scope| {
                let handles: Vec<_> = self
                    .slots
                    .iter_mut()
                    .enumerate()
                    .map(|(e, slot)| {
                        let snapshot: &ParamsData = &snapshot;
                        scope.spawn(move || {
                            let local = Policy::from_data(snapshot).expect("snapshot rebuild");
                            collect_env(&local, slot, e as u64, run_seed, horizon)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("collector worker")).collect()
            });
            finished_per_env = Vec::with_capacity(results.len());
            for (segment, finished) in results {
                combined.append(segment);
                finished_per_env.push(finished);
            }
        } else {
            finished_per_env = Vec::with_capacity(self.slots.len());
            for (e, slot) in self.slots.iter_mut().enumerate() {
                let (segment, finished) = collect_env(policy, slot, e as u64, run_seed, horizon);
                combined.append(segment);
                finished_per_env.push(finished);
            }
        }

        for rewards in finished_per_env {
            for r in rewards {
                self.finished.push_back(r);
                if self.finished.len() > REWARD_WINDOW {
                    self.finished.pop_front();
                }
            }
        }
        combined
    }
}

fn reset_seed(run_seed: u64, env_index: u64, episode: u64) -> u64 {
    use rand::RngCore;
    stream_rng(run_seed, Stream::EnvReset(env_index, episode)).next_u64()
}

/// Roll one env forward `horizon` steps. Returns its sealed single-segment
/// buffer and the rewards of episodes that finished during the stretch.
fn collect_env(
    policy: &Policy,
    slot: &mut EnvSlot,
    env_index: u64,
    run_seed: u64,
    horizon: usize,
) -> (RolloutBuffer, Vec<f64>) {
    let act_dim = policy.act_dim();
    let log_std = policy.log_std().to_vec();
    let mut buffer = RolloutBuffer::new(policy.obs_dim(), act_dim, policy.is_recurrent());
    let mut finished = Vec::new();
    let mut tape = Tape::no_grad();
    let mut last_done = false;

    for _ in 0..horizon {
        let (mean, value, next_state) = policy.act_forward(&mut tape, &slot.obs, slot.state.as_ref());
        let mut noise_rng = stream_rng(run_seed, Stream::ActionNoise(env_index, slot.step_count));
        let noise = standard_normal(&mut noise_rng, act_dim);
        let action = sample_and_log_prob(&mean, &log_std, &noise);

        let result = slot.env.step(&action.sample);
        buffer.push(
            &slot.obs,
            &action.sample,
            action.log_prob,
            result.reward,
            result.done,
            value,
            slot.state.clone(),
        );
        slot.step_count += 1;
        slot.episode_reward += result.reward;
        last_done = result.done;

        if result.done {
            finished.push(slot.episode_reward);
            slot.episode_reward = 0.0;
            slot.episode_index += 1;
            slot.obs = slot
                .env
                .reset(reset_seed(run_seed, env_index, slot.episode_index));
            if let Some(state) = slot.state.as_mut() {
                *state = RecurrentState::zeros(state.h.len());
            }
        } else {
            slot.obs = result.observation;
            if let Some(next) = next_state {
                slot.state = Some(next);
            }
        }
    }

    // bootstrap V(s_N) for a tail that did not terminate
    let bootstrap = if last_done {
        0.0
    } else {
        let (_, value, _) = policy.act_forward(&mut tape, &slot.obs, slot.state.as_ref());
        value
    };
    buffer.seal_segment(bootstrap);
    (buffer, finished)
}
