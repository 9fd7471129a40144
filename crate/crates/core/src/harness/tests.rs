use super::*;
use crate::config::TrainConfig;
use crate::envs::{make_env, Env, EnvName, StepResult};
use crate::learn::Algo;
use crate::nets::{Policy, PolicyKind};

use approx::assert_abs_diff_eq;

fn small_config(env: EnvName, algo: Algo, policy: PolicyKind) -> TrainConfig {
    let mut c = TrainConfig::new(env, algo, policy);
    c.total_timesteps = 512;
    c.parallel_envs = 2;
    c.ppo.horizon = 64;
    c.ppo.epochs = 2;
    c.ppo.minibatch_size = 32;
    c.ppo.chunk_len = 32;
    c.lstm_hidden = 8;
    c.checkpoint_every = 2;
    c.seed = 5;
    c
}

fn rows_match_ignoring_seconds(a: &[MetricsRow], b: &[MetricsRow]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let mut x = x.clone();
            let mut y = y.clone();
            x.seconds = 0.0;
            y.seconds = 0.0;
            x == y
        })
}

#[test]
fn minimal_rollout_is_one_transition() {
    let policy = Policy::new(PolicyKind::Mlp, 4, 1, 0, 1);
    let mut collector = Collector::new(EnvName::Cartpole, 1, 7, None, false);
    let buffer = collector.collect(&policy, 1);
    assert_eq!(buffer.len(), 1);
    assert_eq!(buffer.segments.len(), 1);
}

#[test]
fn near_silent_policy_leaves_reach_arm_still() {
    let policy = Policy::new(PolicyKind::Mlp, 11, 7, 0, 1);
    for (_, t) in policy.params() {
        t.set_data(&vec![0.0; t.numel()]);
    }
    policy.log_std().set_data(&[-20.0; 7]);
    let mut collector = Collector::new(EnvName::Reach, 1, 3, None, false);
    let start_obs = collector.slots[0].obs.clone();
    let buffer = collector.collect(&policy, 25);
    for i in 0..buffer.len() {
        for a in buffer.action_row(i) {
            assert!(a.abs() < 1e-6, "action {a}");
        }
    }
    for (a, b) in start_obs[..7].iter().zip(&collector.slots[0].obs[..7]) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-6);
    }
}

#[test]
fn parallel_collection_matches_sequential_bitwise() {
    let policy = Policy::new(PolicyKind::Mlp, 11, 7, 0, 11);
    let run = |parallel: bool| {
        let mut collector = Collector::new(EnvName::Reach, 8, 21, None, parallel);
        collector.collect(&policy, 256)
    };
    let (seq, par) = (run(false), run(true));
    assert_eq!(seq.len(), 2048);
    assert_eq!(seq.segments.len(), 8);
    assert_eq!(seq.observations, par.observations);
    assert_eq!(seq.actions, par.actions);
    assert_eq!(seq.log_probs, par.log_probs);
    assert_eq!(seq.rewards, par.rewards);
    assert_eq!(seq.dones, par.dones);
    assert_eq!(seq.values, par.values);
    for (a, b) in seq.segments.iter().zip(&par.segments) {
        assert_eq!(a.start, b.start);
        assert_eq!(a.len, b.len);
        assert_eq!(a.bootstrap_value, b.bootstrap_value);
    }
}

#[test]
fn recurrent_collection_resets_states_at_dones() {
    let policy = Policy::new(PolicyKind::Lstm, 4, 1, 8, 13);
    let mut collector = Collector::new(EnvName::Cartpole, 2, 17, Some(8), false);
    let buffer = collector.collect(&policy, 120);
    let states = buffer.recurrent_states.as_ref().unwrap();
    let mut saw_done = false;
    for seg in &buffer.segments {
        for i in seg.start..seg.start + seg.len - 1 {
            if buffer.dones[i] {
                saw_done = true;
                assert!(states[i + 1].is_zero(), "state after done must be zero");
            }
        }
    }
    assert!(saw_done, "fixture never finished an episode; lengthen horizon");
}

#[test]
fn snapshot_isolation_params_untouched_by_collection() {
    let policy = Policy::new(PolicyKind::Mlp, 13, 7, 0, 23);
    let before = policy.to_data();
    let mut collector = Collector::new(EnvName::Feeding, 4, 29, None, true);
    let _ = collector.collect(&policy, 64);
    assert_eq!(policy.to_data(), before);
}

#[test]
fn tiny_budget_runs_zero_updates() {
    let mut config = small_config(EnvName::Cartpole, Algo::Ppo, PolicyKind::Mlp);
    config.total_timesteps = 100; // < horizon * envs = 128
    let mut trainer = Trainer::new(config).unwrap();
    let initial = trainer.policy.to_data();
    let mut rows = Vec::new();
    trainer.run(|r| {
        rows.push(r.clone());
        Ok(())
    }).unwrap();
    assert!(rows.is_empty());
    assert_eq!(trainer.policy.to_data(), initial);
}

#[test]
fn training_is_deterministic_across_runs() {
    let run = || {
        let mut trainer =
            Trainer::new(small_config(EnvName::Reach, Algo::Ppo, PolicyKind::Mlp)).unwrap();
        let mut rows = Vec::new();
        trainer.run(|r| {
            rows.push(r.clone());
            Ok(())
        }).unwrap();
        (rows, trainer.policy.to_data())
    };
    let (rows_a, params_a) = run();
    let (rows_b, params_b) = run();
    assert_eq!(rows_a.len(), 4);
    assert!(rows_match_ignoring_seconds(&rows_a, &rows_b));
    assert_eq!(params_a, params_b);
}

#[test]
fn timestep_accounting_is_exact() {
    let config = small_config(EnvName::Cartpole, Algo::Ppo, PolicyKind::Mlp);
    let updates = config.total_updates();
    let mut trainer = Trainer::new(config.clone()).unwrap();
    let mut rows = Vec::new();
    trainer.run(|r| {
        rows.push(r.clone());
        Ok(())
    }).unwrap();
    assert_eq!(rows.len() as u64, updates);
    let collected: u64 = trainer.collector.slots.iter().map(|s| s.step_count).sum();
    assert_eq!(collected, updates * config.steps_per_update());
    assert_eq!(rows.last().unwrap().timesteps, collected);
}

#[test]
fn checkpoint_round_trip_and_error_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ppgl");
    let ckpt = Checkpoint {
        config_digest: [7u8; 32],
        arrays: vec![
            ("a/b".into(), vec![2, 3], vec![1.0, -2.5, 3.25, 0.0, 5.5, -0.125]),
            ("c".into(), vec![1], vec![42.0]),
        ],
    };
    save(&path, &ckpt).unwrap();
    let loaded = load(&path).unwrap();
    assert_eq!(loaded, ckpt);

    // truncation: drop the final byte
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(load(&path), Err(CheckpointError::Truncated(_))));

    // version mismatch
    let mut bumped = bytes.clone();
    bumped[4] = 99;
    std::fs::write(&path, &bumped).unwrap();
    assert!(matches!(
        load(&path),
        Err(CheckpointError::VersionMismatch { found: 99 })
    ));

    // corrupt magic
    let mut garbled = bytes.clone();
    garbled[0] = b'X';
    std::fs::write(&path, &garbled).unwrap();
    assert!(matches!(load(&path), Err(CheckpointError::CorruptHeader(_))));
}

#[test]
fn resume_continues_bit_exact() {
    for (algo, policy) in [(Algo::Ppo, PolicyKind::Mlp), (Algo::Ppg, PolicyKind::Lstm)] {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(EnvName::Cartpole, algo, policy);
        config.ppg.n_pi = 2;
        config.ppg.aux_epochs = 1;
        config.out_dir = Some(dir.path().to_path_buf());

        // uninterrupted reference run: 4 updates
        let mut full = Trainer::new(config.clone()).unwrap();
        let mut full_rows = Vec::new();
        full.run(|r| {
            full_rows.push(r.clone());
            Ok(())
        }).unwrap();

        // resume from the cadence checkpoint at update 2
        let ckpt_path = dir.path().join("ckpt_000002.ppgl");
        assert!(ckpt_path.exists(), "cadence checkpoint missing");
        let mut resumed = Trainer::resume(config.clone(), &ckpt_path).unwrap();
        assert_eq!(resumed.update_index, 2);
        let mut tail_rows = Vec::new();
        resumed.run(|r| {
            tail_rows.push(r.clone());
            Ok(())
        }).unwrap();

        assert!(
            rows_match_ignoring_seconds(&full_rows[2..], &tail_rows),
            "{algo} {policy}: resumed rows diverged"
        );
        assert_eq!(full.policy.to_data(), resumed.policy.to_data());
    }
}

#[test]
fn resume_rejects_config_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(EnvName::Cartpole, Algo::Ppo, PolicyKind::Mlp);
    config.out_dir = Some(dir.path().to_path_buf());
    let mut trainer = Trainer::new(config.clone()).unwrap();
    trainer.run(|_| Ok(())).unwrap();

    let mut other = config.clone();
    other.ppo.lr = 1e-3;
    match Trainer::resume(other, &dir.path().join("final.ppgl")) {
        Err(HarnessError::Checkpoint(CheckpointError::ConfigMismatch)) => {}
        Err(e) => panic!("wrong error: {e}"),
        Ok(_) => panic!("config mismatch accepted"),
    }
}

/// Env wrapper that pins the reset seed: a deterministic env with a fixed
/// target for the fixed-conditions evaluation example.
struct FixedSeed(Box<dyn Env>, u64);

impl Env for FixedSeed {
    fn name(&self) -> EnvName {
        self.0.name()
    }
    fn obs_dim(&self) -> usize {
        self.0.obs_dim()
    }
    fn act_dim(&self) -> usize {
        self.0.act_dim()
    }
    fn max_steps(&self) -> usize {
        self.0.max_steps()
    }
    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.0.reset(self.1)
    }
    fn step(&mut self, action: &[f64]) -> StepResult {
        self.0.step(action)
    }
    fn observe(&self) -> Vec<f64> {
        self.0.observe()
    }
    fn state_vec(&self) -> Vec<f64> {
        self.0.state_vec()
    }
    fn restore_state(&mut self, state: &[f64]) {
        self.0.restore_state(state)
    }
}

#[test]
fn deterministic_eval_on_fixed_env_has_zero_std() {
    let policy = Policy::new(PolicyKind::Mlp, 11, 7, 0, 3);
    let report = evaluate_factory(
        &policy,
        || Box::new(FixedSeed(make_env(EnvName::Reach), 77)),
        "reach-fixed",
        20,
        EvalMode::Deterministic,
        5,
    );
    // rewards are bit-identical; the std picks up only mean-rounding dust
    assert!(report.std < 1e-12, "std {}", report.std);
    let first = report.episode_rewards[0];
    assert!(report.episode_rewards.iter().all(|&r| r == first));
}

#[test]
fn single_episode_eval_mean_is_that_episode() {
    let policy = Policy::new(PolicyKind::Mlp, 4, 1, 0, 9);
    let report = evaluate(&policy, EnvName::Cartpole, 1, EvalMode::Stochastic, 123);
    assert_eq!(report.episodes, 1);
    assert_eq!(report.mean, report.episode_rewards[0]);
    assert_eq!(report.std, 0.0);
}

#[test]
fn untrained_policy_within_three_sigma_of_random_baseline() {
    let policy = Policy::new(PolicyKind::Mlp, 11, 7, 0, 31);
    let trained = evaluate(&policy, EnvName::Reach, 50, EvalMode::Stochastic, 41);
    let baseline = random_action_baseline(EnvName::Reach, 100, 43);
    assert!(
        (trained.mean - baseline.mean).abs() <= 3.0 * baseline.std,
        "untrained {} vs baseline {} (std {})",
        trained.mean,
        baseline.mean,
        baseline.std
    );
}

#[test]
fn eval_mutates_nothing() {
    let config = small_config(EnvName::Cartpole, Algo::Ppo, PolicyKind::Mlp);
    let mut trainer = Trainer::new(config).unwrap();
    trainer.run(|_| Ok(())).unwrap();
    let params = trainer.policy.to_data();
    let adam_m = trainer.adam.m.clone();
    let _ = evaluate_both(&trainer.policy, EnvName::Cartpole, 10, 7);
    assert_eq!(trainer.policy.to_data(), params);
    assert_eq!(trainer.adam.m, adam_m);
}

#[test]
fn policy_rebuild_from_checkpoint_params() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(EnvName::Cartpole, Algo::Ppo, PolicyKind::Lstm);
    config.out_dir = Some(dir.path().to_path_buf());
    let mut trainer = Trainer::new(config).unwrap();
    trainer.run(|_| Ok(())).unwrap();

    let ckpt = load(&dir.path().join("final.ppgl")).unwrap();
    let rebuilt = policy_from_checkpoint(&ckpt).unwrap();
    assert_eq!(rebuilt.kind(), PolicyKind::Lstm);
    assert_eq!(rebuilt.to_data().entries, trainer.policy.to_data().entries);
}
