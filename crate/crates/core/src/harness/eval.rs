//! Policy evaluation over full episodes on fresh environments. Never touches
//! optimizer state; parameters are read-only throughout.

use serde::{Deserialize, Serialize};

use crate::envs::{make_env, EnvName};
use crate::nets::{sample_and_log_prob, Policy, RecurrentState};
use crate::rng::{standard_normal, stream_rng, Stream};
use crate::tensor::Tape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Sample actions from the policy distribution.
    Stochastic,
    /// Act with the distribution mean.
    Deterministic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub env: String,
    pub mode: EvalMode,
    pub episodes: usize,
    pub episode_rewards: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Mean of each episode's final task-progress fraction.
    pub mean_final_progress: f64,
    /// Fraction of episodes that made any task progress
    /// (contact achieved / waypoints wiped / contact-steps held).
    pub positive_progress_fraction: f64,
    pub mean_total_bonus: f64,
}

/// Roll `n_episodes` full episodes with per-episode seeds `seed + i`.
pub fn evaluate(
    policy: &Policy,
    env_name: EnvName,
    n_episodes: usize,
    mode: EvalMode,
    seed: u64,
) -> EvalReport {
    evaluate_factory(
        policy,
        || make_env(env_name),
        &env_name.to_string(),
        n_episodes,
        mode,
        seed,
    )
}

/// Like [`evaluate`] but over caller-supplied environment instances
/// (fixed-target fixtures, wrappers).
pub fn evaluate_factory(
    policy: &Policy,
    factory: impl Fn() -> Box<dyn crate::envs::Env>,
    env_label: &str,
    n_episodes: usize,
    mode: EvalMode,
    seed: u64,
) -> EvalReport {
    let mut rewards = Vec::with_capacity(n_episodes);
    let mut final_progress = Vec::with_capacity(n_episodes);
    let mut total_bonus = Vec::with_capacity(n_episodes);
    let log_std = policy.log_std().to_vec();
    let mut tape = Tape::no_grad();

    for i in 0..n_episodes {
        let mut env = factory();
        let mut obs = env.reset(seed.wrapping_add(i as u64));
        let mut state = policy
            .is_recurrent()
            .then(|| RecurrentState::zeros(policy.lstm_hidden()));
        let mut noise_rng = stream_rng(seed, Stream::Eval(i as u64));
        let mut total = 0.0;
        let mut bonus = 0.0;
        let progress;
        loop {
            let (mean, _, next_state) = policy.act_forward(&mut tape, &obs, state.as_ref());
            let action = match mode {
                EvalMode::Deterministic => mean,
                EvalMode::Stochastic => {
                    let noise = standard_normal(&mut noise_rng, policy.act_dim());
                    sample_and_log_prob(&mean, &log_std, &noise).sample
                }
            };
            let result = env.step(&action);
            total += result.reward;
            bonus += result.info.bonus;
            if result.done {
                progress = result.info.progress;
                break;
            }
            obs = result.observation;
            state = next_state;
        }
        rewards.push(total);
        final_progress.push(progress);
        total_bonus.push(bonus);
    }

    report_from(env_label, mode, rewards, final_progress, total_bonus)
}

fn report_from(
    env_label: &str,
    mode: EvalMode,
    rewards: Vec<f64>,
    final_progress: Vec<f64>,
    total_bonus: Vec<f64>,
) -> EvalReport {
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    EvalReport {
        env: env_label.to_string(),
        mode,
        episodes: rewards.len(),
        mean,
        std: var.sqrt(),
        min: rewards.iter().cloned().fold(f64::INFINITY, f64::min),
        max: rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean_final_progress: final_progress.iter().sum::<f64>() / n,
        positive_progress_fraction: final_progress.iter().filter(|&&p| p > 0.0).count() as f64 / n,
        mean_total_bonus: total_bonus.iter().sum::<f64>() / n,
        episode_rewards: rewards,
    }
}

/// Both evaluation modes side by side (the trained-run report format).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub deterministic: EvalReport,
    pub stochastic: EvalReport,
}

pub fn evaluate_both(policy: &Policy, env_name: EnvName, n_episodes: usize, seed: u64) -> EvalSummary {
    EvalSummary {
        deterministic: evaluate(policy, env_name, n_episodes, EvalMode::Deterministic, seed),
        stochastic: evaluate(policy, env_name, n_episodes, EvalMode::Stochastic, seed),
    }
}

/// Mean and std of episode returns under uniform-random actions; the
/// brute-force baseline the acceptance gates compare against.
pub fn random_action_baseline(env_name: EnvName, n_episodes: usize, seed: u64) -> EvalReport {
    use rand::Rng;
    let mut rewards = Vec::with_capacity(n_episodes);
    let mut final_progress = Vec::with_capacity(n_episodes);
    let mut total_bonus = Vec::with_capacity(n_episodes);
    for i in 0..n_episodes {
        let mut env = make_env(env_name);
        env.reset(seed.wrapping_add(i as u64));
        let mut rng = stream_rng(seed, Stream::Eval(i as u64));
        let act_dim = env.act_dim();
        let mut total = 0.0;
        let mut bonus = 0.0;
        let progress;
        loop {
            let action: Vec<f64> = (0..act_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let result = env.step(&action);
            total += result.reward;
            bonus += result.info.bonus;
            if result.done {
                progress = result.info.progress;
                break;
            }
        }
        rewards.push(total);
        final_progress.push(progress);
        total_bonus.push(bonus);
    }
    report_from(&env_name.to_string(), EvalMode::Stochastic, rewards, final_progress, total_bonus)
}
