use super::ppo::boundary_states_zeroed;
use super::*;
use crate::gradcheck::{fd_gradient, max_grad_err};
use crate::nets::{Policy, PolicyKind, RecurrentState};
use crate::rng::standard_normal;
use crate::tensor::{Tape, Tensor};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Explicit-sum GAE oracle:
/// A_t = sum_{k>=t} (gamma*lam)^{k-t} * delta_k * prod_{j=t}^{k-1}(1-done_j).
fn gae_oracle(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lam: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    for t in 0..n {
        let mut weight = 1.0;
        let mut acc = 0.0;
        for k in t..n {
            let not_done = if dones[k] { 0.0 } else { 1.0 };
            let next_v = if k + 1 < n { values[k + 1] } else { last_value };
            let delta = rewards[k] + gamma * next_v * not_done - values[k];
            acc += weight * delta;
            if dones[k] {
                break;
            }
            weight *= gamma * lam * not_done;
        }
        adv[t] = acc;
    }
    adv
}

/// Synthetic on-policy buffer: actions sampled from the given policy so the
/// first-epoch ratio is exactly one.
fn synth_buffer(policy: &Policy, n: usize, seed: u64) -> RolloutBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (obs_dim, act_dim) = (policy.obs_dim(), policy.act_dim());
    let mut buffer = RolloutBuffer::new(obs_dim, act_dim, policy.is_recurrent());
    let mut state = policy
        .is_recurrent()
        .then(|| RecurrentState::zeros(policy.lstm_hidden()));
    let mut tape = Tape::no_grad();
    for i in 0..n {
        let obs: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mean, value, next) = policy.act_forward(&mut tape, &obs, state.as_ref());
        let noise = standard_normal(&mut rng, act_dim);
        let ls = policy.log_std().to_vec();
        let act = crate::nets::sample_and_log_prob(&mean, &ls, &noise);
        let done = i % 7 == 6;
        let reward = rng.random_range(-1.0..1.0);
        buffer.push(&obs, &act.sample, act.log_prob, reward, done, value, state.clone());
        state = next.map(|s| if done { RecurrentState::zeros(policy.lstm_hidden()) } else { s });
    }
    buffer.seal_segment(0.25);
    compute_gae(&mut buffer, 0.99, 0.95).unwrap();
    buffer
}

fn mlp_policy() -> Policy {
    Policy::new(PolicyKind::Mlp, 6, 3, 0, 42)
}

fn lstm_policy() -> Policy {
    Policy::new(PolicyKind::Lstm, 5, 2, 8, 42)
}

fn small_cfg() -> PpoConfig {
    PpoConfig {
        horizon: 32,
        minibatch_size: 8,
        epochs: 2,
        chunk_len: 16,
        ..PpoConfig::default()
    }
}

// ── GAE ────────────────────────────────────────────────────────────

#[test]
fn gae_single_terminal_step() {
    let (adv, ret) = gae_1d(&[1.0], &[0.0], &[true], 0.0, 0.99, 0.95).unwrap();
    assert_eq!(adv, vec![1.0]);
    assert_eq!(ret, vec![1.0]);
}

#[test]
fn gae_gamma_zero_is_myopic() {
    let rewards = [0.5, -1.0, 2.0, 0.1];
    let values = [0.2, 0.4, -0.3, 1.0];
    let dones = [false, false, true, false];
    for lam in [0.0, 0.5, 1.0] {
        let (adv, _) = gae_1d(&rewards, &values, &dones, 0.7, 0.0, lam).unwrap();
        for t in 0..4 {
            assert_abs_diff_eq!(adv[t], rewards[t] - values[t], epsilon = 1e-15);
        }
    }
}

#[test]
fn gae_hand_sequence_matches_explicit_sum() {
    let rewards = [1.0, 0.5, -0.25, 2.0];
    let values = [0.3, -0.1, 0.8, 0.2];
    let dones = [false, false, false, false];
    let (adv, ret) = gae_1d(&rewards, &values, &dones, 0.6, 0.99, 0.95).unwrap();
    let expect = gae_oracle(&rewards, &values, &dones, 0.6, 0.99, 0.95);
    for t in 0..4 {
        assert_abs_diff_eq!(adv[t], expect[t], epsilon = 1e-12);
        assert_abs_diff_eq!(ret[t], expect[t] + values[t], epsilon = 1e-12);
    }
}

#[test]
fn gae_rejects_empty() {
    assert!(matches!(
        gae_1d(&[], &[], &[], 0.0, 0.99, 0.95),
        Err(LearnError::EmptyBuffer)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gae_matches_oracle_on_random_sequences(
        seed in 0u64..10_000,
        len in 1usize..20,
        gamma in 0.5f64..1.0,
        lam in 0.0f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dones: Vec<bool> = (0..len).map(|_| rng.random_bool(0.2)).collect();
        let last = rng.random_range(-2.0..2.0);
        let (adv, _) = gae_1d(&rewards, &values, &dones, last, gamma, lam).unwrap();
        let expect = gae_oracle(&rewards, &values, &dones, last, gamma, lam);
        for t in 0..len {
            prop_assert!((adv[t] - expect[t]).abs() < 1e-10);
        }
    }

    // Undiscounted Monte-Carlo equivalence on a fully-terminated episode.
    #[test]
    fn gae_monte_carlo_limit(seed in 0u64..10_000, len in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut dones = vec![false; len];
        dones[len - 1] = true;
        let (_, ret) = gae_1d(&rewards, &values, &dones, 0.0, 1.0, 1.0).unwrap();
        let mut suffix = 0.0;
        let mut expect = vec![0.0; len];
        for t in (0..len).rev() {
            suffix += rewards[t];
            expect[t] = suffix;
        }
        for t in 0..len {
            prop_assert!((ret[t] - expect[t]).abs() < 1e-10);
        }
    }

    // Per-sample clipped surrogate is bounded.
    #[test]
    fn clipped_surrogate_bound(rho in 0.0f64..5.0, adv in -3.0f64..3.0) {
        let eps = 0.2;
        let surr = (rho * adv).min(rho.clamp(1.0 - eps, 1.0 + eps) * adv);
        prop_assert!(surr.abs() <= (rho * adv).abs().max((1.0 + eps) * adv.abs()) + 1e-12);
    }
}

// ── Advantage normalization ────────────────────────────────────────

#[test]
fn normalize_examples() {
    // already standardized up to the 1e-8 epsilon guard
    let v = normalize_advantages(&[1.0, -1.0]);
    assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-7);
    assert_abs_diff_eq!(v[1], -1.0, epsilon = 1e-7);
    assert_eq!(normalize_advantages(&[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
    let single = normalize_advantages(&[3.5]);
    assert_eq!(single, vec![3.5]);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let raw: Vec<f64> = (0..500).map(|_| rng.random_range(-5.0..9.0)).collect();
    let normed = normalize_advantages(&raw);
    let mean = normed.iter().sum::<f64>() / normed.len() as f64;
    let std =
        (normed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / normed.len() as f64).sqrt();
    assert!(mean.abs() < 1e-10);
    assert!((std - 1.0).abs() < 1e-6);
}

// ── Adam ───────────────────────────────────────────────────────────

#[test]
fn adam_first_step_is_signed_lr() {
    let p = Tensor::param(vec![1], vec![0.0]).unwrap();
    let mut adam = Adam::for_params(std::slice::from_ref(&p));
    p.accumulate_grad(&[3.0]);
    adam.step(std::slice::from_ref(&p), 0.01);
    assert_abs_diff_eq!(p.to_vec()[0], -0.01, epsilon = 1e-6);
}

#[test]
fn adam_zero_gradient_fixed_point() {
    let p = Tensor::param(vec![2], vec![1.5, -0.5]).unwrap();
    let mut adam = Adam::for_params(std::slice::from_ref(&p));
    for _ in 0..25 {
        p.zero_grad();
        p.accumulate_grad(&[0.0, 0.0]);
        adam.step(std::slice::from_ref(&p), 0.1);
    }
    assert_eq!(p.to_vec(), vec![1.5, -0.5]);
}

#[test]
fn adam_three_steps_match_hand_oracle() {
    // f(theta) = theta^2, grad = 2 theta, theta0 = 1, lr = 0.1
    let p = Tensor::param(vec![1], vec![1.0]).unwrap();
    let mut adam = Adam::for_params(std::slice::from_ref(&p));

    // hand-stepped oracle with the same constants
    let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8, 0.1);
    let (mut m, mut v, mut theta) = (0.0, 0.0, 1.0f64);
    for t in 1..=3i32 {
        let g = 2.0 * theta;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1.powi(t));
        let v_hat = v / (1.0 - b2.powi(t));
        theta -= lr * m_hat / (v_hat.sqrt() + eps);
    }

    for _ in 0..3 {
        let g = 2.0 * p.to_vec()[0];
        p.zero_grad();
        p.accumulate_grad(&[g]);
        adam.step(std::slice::from_ref(&p), lr);
    }
    assert_abs_diff_eq!(p.to_vec()[0], theta, epsilon = 1e-12);
}

#[test]
fn adam_first_step_magnitude_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = Tensor::param(vec![4], vec![0.0; 4]).unwrap();
        let mut adam = Adam::for_params(std::slice::from_ref(&p));
        let g: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
        p.accumulate_grad(&g);
        adam.step(std::slice::from_ref(&p), 0.05);
        for v in p.to_vec() {
            assert!(v.abs() <= 0.05 * (1.0 + 1e-6));
        }
    }
}

#[test]
fn grad_clip_scales_to_max_norm() {
    let p = Tensor::param(vec![2], vec![0.0, 0.0]).unwrap();
    p.accumulate_grad(&[3.0, 4.0]);
    let pre = clip_grad_norm(std::slice::from_ref(&p), 0.5);
    assert_abs_diff_eq!(pre, 5.0, epsilon = 1e-12);
    let g = p.grad().unwrap();
    let post = (g[0] * g[0] + g[1] * g[1]).sqrt();
    assert_abs_diff_eq!(post, 0.5, epsilon = 1e-12);
}

// ── PPO loss ───────────────────────────────────────────────────────

#[test]
fn unit_ratio_policy_term_vanishes_with_normalized_advantages() {
    let policy = mlp_policy();
    let buffer = synth_buffer(&policy, 32, 5);
    let indices: Vec<usize> = (0..16).collect();
    let mut tape = Tape::new();
    let (_, diag) = ppo_loss(&mut tape, &policy, &buffer, &indices, &PpoConfig::default()).unwrap();
    assert!(diag.policy_loss.abs() < 1e-10, "{}", diag.policy_loss);
    assert_eq!(diag.clip_fraction, 0.0);
    assert!(diag.approx_kl.abs() < 1e-12);
}

#[test]
fn analytic_clip_cases() {
    // sample 0: rho = 2, A = 1  -> surrogate clipped at 1.2
    // sample 1: rho = 0.5, A = -1 -> pessimistic side binds at -0.8
    // [1, -1] is already standardized, so normalization leaves A unchanged.
    let policy = mlp_policy();
    let mut buffer = synth_buffer(&policy, 2, 9);
    buffer.log_probs[0] -= (2.0f64).ln(); // old = new - ln2 -> rho = 2
    buffer.log_probs[1] += (2.0f64).ln(); // old = new + ln2 -> rho = 0.5
    buffer.advantages = vec![1.0, -1.0];
    buffer.returns = buffer.values.clone();

    let mut tape = Tape::new();
    let (_, diag) = ppo_loss(&mut tape, &policy, &buffer, &[0, 1], &PpoConfig::default()).unwrap();
    // policy term = -mean(1.2, -0.8) = -0.2
    assert_abs_diff_eq!(diag.policy_loss, -0.2, epsilon = 1e-7);
    assert_eq!(diag.clip_fraction, 1.0);
}

#[test]
fn ppo_gradients_match_finite_differences() {
    let policy = mlp_policy();
    let mut buffer = synth_buffer(&policy, 12, 11);
    // desynchronize old log-probs so ratios stray from 1
    for lp in buffer.log_probs.iter_mut() {
        *lp -= 0.05;
    }
    let cfg = PpoConfig {
        entropy_coef: 0.01,
        ..PpoConfig::default()
    };
    let indices: Vec<usize> = (0..12).collect();

    let mut tape = Tape::new();
    let (loss, _) = ppo_loss(&mut tape, &policy, &buffer, &indices, &cfg).unwrap();
    policy.zero_grads();
    tape.backward(&loss).unwrap();

    for (name, t) in policy.params() {
        let analytic = t.grad().unwrap();
        let numeric = fd_gradient(&t, |tape| {
            ppo_loss(tape, &policy, &buffer, &indices, &cfg).unwrap().0.item()
        });
        let err = max_grad_err(&analytic, &numeric);
        assert!(err < 1e-4, "{name}: err {err}");
    }
}

// ── PPO update ─────────────────────────────────────────────────────

#[test]
fn zero_epochs_is_identity() {
    let policy = mlp_policy();
    let before = policy.to_data();
    let mut buffer = synth_buffer(&policy, 32, 7);
    let cfg = PpoConfig {
        epochs: 0,
        ..small_cfg()
    };
    let mut adam = Adam::for_params(&policy.param_tensors());
    ppo_update(&policy, &mut buffer, &cfg, &mut adam, 1, 0, false).unwrap();
    assert_eq!(policy.to_data(), before);
}

#[test]
fn stationary_point_leaves_params_unchanged() {
    let policy = mlp_policy();
    let before = policy.to_data();
    let mut buffer = synth_buffer(&policy, 24, 13);
    buffer.advantages = vec![0.0; buffer.len()];
    buffer.returns = buffer.values.clone();
    let cfg = PpoConfig {
        entropy_coef: 0.0,
        epochs: 1,
        ..small_cfg()
    };
    let mut adam = Adam::for_params(&policy.param_tensors());
    let metrics = ppo_update(&policy, &mut buffer, &cfg, &mut adam, 1, 0, false).unwrap();
    assert!(metrics.grad_norm < 1e-8, "grad norm {}", metrics.grad_norm);
    assert_eq!(policy.to_data(), before);
}

#[test]
fn update_is_bit_deterministic() {
    let run = |kind: PolicyKind| {
        let policy = match kind {
            PolicyKind::Mlp => mlp_policy(),
            PolicyKind::Lstm => lstm_policy(),
        };
        let mut buffer = synth_buffer(&policy, 48, 21);
        let mut adam = Adam::for_params(&policy.param_tensors());
        ppo_update(&policy, &mut buffer, &small_cfg(), &mut adam, 3, 5, false).unwrap();
        policy.to_data()
    };
    assert_eq!(run(PolicyKind::Mlp), run(PolicyKind::Mlp));
    assert_eq!(run(PolicyKind::Lstm), run(PolicyKind::Lstm));
}

#[test]
fn divergent_loss_restores_snapshot() {
    let policy = mlp_policy();
    let before = policy.to_data();
    let mut buffer = synth_buffer(&policy, 16, 23);
    buffer.advantages[3] = f64::NAN;
    let mut adam = Adam::for_params(&policy.param_tensors());
    let metrics = ppo_update(&policy, &mut buffer, &small_cfg(), &mut adam, 1, 0, false).unwrap();
    assert!(metrics.diverged);
    assert_eq!(policy.to_data(), before);
}

// ── Recurrent state recomputation ──────────────────────────────────

#[test]
fn recompute_is_identity_when_params_unchanged() {
    let policy = lstm_policy();
    let mut buffer = synth_buffer(&policy, 40, 31);
    let stored = buffer.recurrent_states.clone().unwrap();
    recompute_recurrent_states(&policy, &mut buffer);
    let refreshed = buffer.recurrent_states.as_ref().unwrap();
    for (a, b) in stored.iter().zip(refreshed) {
        for (x, y) in a.h.iter().zip(&b.h).chain(a.c.iter().zip(&b.c)) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }
    assert!(boundary_states_zeroed(&buffer));
}

#[test]
fn recompute_detects_staleness_after_perturbation() {
    let policy = lstm_policy();
    let mut buffer = synth_buffer(&policy, 40, 37);
    let stored = buffer.recurrent_states.clone().unwrap();

    if let Policy::Lstm(p) = &policy {
        p.w_hg.nudge(0, 1e-3);
    }
    recompute_recurrent_states(&policy, &mut buffer);
    let refreshed = buffer.recurrent_states.as_ref().unwrap();
    let moved = stored.iter().zip(refreshed).any(|(a, b)| {
        a.h.iter().zip(&b.h).any(|(x, y)| (x - y).abs() > 1e-8)
            || a.c.iter().zip(&b.c).any(|(x, y)| (x - y).abs() > 1e-8)
    });
    assert!(moved, "stale states went undetected");
    assert!(boundary_states_zeroed(&buffer));
}

// ── PPG ────────────────────────────────────────────────────────────

#[test]
fn aux_store_counts_n_entries_per_phase() {
    let policy = mlp_policy();
    let cfg = small_cfg();
    let mut adam = Adam::for_params(&policy.param_tensors());
    let mut store = AuxStore::new(policy.obs_dim(), policy.act_dim());
    let n_pi = 3;
    for phase in 0..n_pi {
        let mut buffer = synth_buffer(&policy, 32, 41 + phase);
        ppg_policy_phase(&policy, &mut buffer, &cfg, &mut adam, 1, phase, false, &mut store)
            .unwrap();
        assert_eq!(store.len(), 32 * (phase as usize + 1));
    }
    assert_eq!(store.len(), 32 * n_pi as usize);
}

#[test]
fn policy_phase_matches_ppo_update_bitwise() {
    let (pa, pb) = (mlp_policy(), mlp_policy());
    let mut adam_a = Adam::for_params(&pa.param_tensors());
    let mut adam_b = Adam::for_params(&pb.param_tensors());
    let cfg = small_cfg();
    let mut store = AuxStore::new(pa.obs_dim(), pa.act_dim());

    let mut buf_a = synth_buffer(&pa, 32, 51);
    let mut buf_b = synth_buffer(&pb, 32, 51);
    ppo_update(&pa, &mut buf_a, &cfg, &mut adam_a, 9, 4, false).unwrap();
    ppg_policy_phase(&pb, &mut buf_b, &cfg, &mut adam_b, 9, 4, false, &mut store).unwrap();
    assert_eq!(pa.to_data(), pb.to_data());
}

#[test]
fn aux_epochs_zero_changes_nothing_and_clears() {
    let policy = mlp_policy();
    let cfg = small_cfg();
    let ppg = PpgConfig {
        n_pi: 1,
        aux_epochs: 0,
        beta_clone: 1.0,
    };
    let mut adam = Adam::for_params(&policy.param_tensors());
    let mut store = AuxStore::new(policy.obs_dim(), policy.act_dim());
    let mut buffer = synth_buffer(&policy, 32, 61);
    ppg_policy_phase(&policy, &mut buffer, &cfg, &mut adam, 2, 0, false, &mut store).unwrap();
    let before = policy.to_data();
    let t_before = adam.t;
    ppg_auxiliary_phase(&policy, &mut store, &cfg, &ppg, &mut adam, 2, 0).unwrap();
    assert_eq!(policy.to_data(), before);
    assert_eq!(adam.t, t_before);
    assert!(store.is_empty());
}

#[test]
fn aux_loss_reduces_to_value_error_at_phase_start() {
    let policy = mlp_policy();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10;
    let obs_rows: Vec<f64> = (0..n * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let obs = Tensor::new(vec![n, 6], obs_rows).unwrap();
    let returns: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ret_t = Tensor::new(vec![n, 1], returns).unwrap();

    let mut tape = Tape::new();
    let (mean, values) = policy.forward_batch(&mut tape, &obs, true).unwrap();
    // pi_old == pi_new: identical parameters bit for bit
    let old_means = mean.detach();
    let old_ls = policy.log_std().detach();
    let (loss, value_err, kl) =
        aux_loss(&mut tape, &policy, &mean, &values, &ret_t, &old_means, &old_ls, 1.0).unwrap();
    assert_eq!(kl, 0.0, "KL must vanish exactly at phase start");
    assert_abs_diff_eq!(loss.item(), value_err, epsilon = 1e-15);
}

#[test]
fn aux_gradients_match_finite_differences() {
    let policy = mlp_policy();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 8;
    let obs_rows: Vec<f64> = (0..n * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let returns: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let old_means_v: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-0.5..0.5)).collect();
    let old_ls_v: Vec<f64> = (0..3).map(|_| rng.random_range(-0.4..0.4)).collect();

    let forward = |tape: &mut Tape| -> f64 {
        let obs = Tensor::new(vec![n, 6], obs_rows.clone()).unwrap();
        let ret_t = Tensor::new(vec![n, 1], returns.clone()).unwrap();
        let om = Tensor::new(vec![n, 3], old_means_v.clone()).unwrap();
        let ols = Tensor::new(vec![3], old_ls_v.clone()).unwrap();
        let (mean, values) = policy.forward_batch(tape, &obs, true).unwrap();
        aux_loss(tape, &policy, &mean, &values, &ret_t, &om, &ols, 0.7).unwrap().0.item()
    };

    let mut tape = Tape::new();
    let obs = Tensor::new(vec![n, 6], obs_rows.clone()).unwrap();
    let ret_t = Tensor::new(vec![n, 1], returns.clone()).unwrap();
    let om = Tensor::new(vec![n, 3], old_means_v.clone()).unwrap();
    let ols = Tensor::new(vec![3], old_ls_v.clone()).unwrap();
    let (mean, values) = policy.forward_batch(&mut tape, &obs, true).unwrap();
    let (loss, _, _) =
        aux_loss(&mut tape, &policy, &mean, &values, &ret_t, &om, &ols, 0.7).unwrap();
    policy.zero_grads();
    tape.backward(&loss).unwrap();

    for (name, t) in policy.params() {
        let analytic = t.grad().unwrap();
        let numeric = fd_gradient(&t, forward);
        let err = max_grad_err(&analytic, &numeric);
        assert!(err < 1e-4, "{name}: err {err}");
    }
}

#[test]
fn full_ppg_with_trivial_schedule_tracks_ppo() {
    // n_pi = 1, aux_epochs = 0: the PPG trajectory is PPO's, bit for bit.
    let run_ppo = || {
        let policy = mlp_policy();
        let mut adam = Adam::for_params(&policy.param_tensors());
        for u in 0..4 {
            let mut buffer = synth_buffer(&policy, 32, 100 + u);
            ppo_update(&policy, &mut buffer, &small_cfg(), &mut adam, 7, u, false).unwrap();
        }
        policy.to_data()
    };
    let run_ppg = || {
        let policy = mlp_policy();
        let mut adam = Adam::for_params(&policy.param_tensors());
        let cfg = small_cfg();
        let ppg = PpgConfig {
            n_pi: 1,
            aux_epochs: 0,
            beta_clone: 1.0,
        };
        let mut store = AuxStore::new(policy.obs_dim(), policy.act_dim());
        for u in 0..4 {
            let mut buffer = synth_buffer(&policy, 32, 100 + u);
            ppg_policy_phase(&policy, &mut buffer, &cfg, &mut adam, 7, u, false, &mut store)
                .unwrap();
            ppg_auxiliary_phase(&policy, &mut store, &cfg, &ppg, &mut adam, 7, u).unwrap();
        }
        policy.to_data()
    };
    assert_eq!(run_ppo(), run_ppg());
}

#[test]
fn aux_phase_moves_torso_through_value_error() {
    // value distillation must reach the shared features, not just the head
    let policy = mlp_policy();
    let cfg = small_cfg();
    let ppg = PpgConfig {
        n_pi: 1,
        aux_epochs: 2,
        beta_clone: 1.0,
    };
    let mut adam = Adam::for_params(&policy.param_tensors());
    let mut store = AuxStore::new(policy.obs_dim(), policy.act_dim());
    let mut buffer = synth_buffer(&policy, 32, 71);
    ppg_policy_phase(&policy, &mut buffer, &cfg, &mut adam, 3, 0, false, &mut store).unwrap();
    let w1_before = match &policy {
        Policy::Mlp(p) => p.w1.to_vec(),
        _ => unreachable!(),
    };
    ppg_auxiliary_phase(&policy, &mut store, &cfg, &ppg, &mut adam, 3, 0).unwrap();
    let w1_after = match &policy {
        Policy::Mlp(p) => p.w1.to_vec(),
        _ => unreachable!(),
    };
    assert!(w1_before.iter().zip(&w1_after).any(|(a, b)| a != b));
}

// ── Config validation ──────────────────────────────────────────────

#[test]
fn config_invariants_enforced() {
    assert!(PpoConfig::default().validate().is_ok());
    assert!(PpoConfig { clip_eps: 1.0, ..PpoConfig::default() }.validate().is_err());
    assert!(PpoConfig { gamma: 0.0, ..PpoConfig::default() }.validate().is_err());
    assert!(PpoConfig { lam: 1.5, ..PpoConfig::default() }.validate().is_err());
    assert!(PpgConfig::default().validate().is_ok());
    assert!(PpgConfig { n_pi: 0, ..PpgConfig::default() }.validate().is_err());
}
