// Temporary training probe used during development; not part of the artifact.
use std::time::Instant;

use ppgl_core::config::TrainConfig;
use ppgl_core::envs::EnvName;
use ppgl_core::harness::{evaluate, random_action_baseline, EvalMode, Trainer};
use ppgl_core::learn::Algo;
use ppgl_core::nets::PolicyKind;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let env: EnvName = args[1].parse().unwrap();
    let algo: Algo = args[2].parse().unwrap();
    let policy: PolicyKind = args[3].parse().unwrap();
    let timesteps: u64 = args[4].parse().unwrap();
    let seed: u64 = args[5].parse().unwrap();

    let mut config = TrainConfig::new(env, algo, policy);
    config.total_timesteps = timesteps;
    config.seed = seed;

    let started = Instant::now();
    let mut trainer = Trainer::new(config).unwrap();
    trainer
        .run(|row| {
            println!(
                "update {:>3} steps {:>8} mean_reward {:>10} ploss {:>9.4} vloss {:>9.4} kl {:>8.5} clip {:>5.3} ent {:>7.3} [{:.1}s]",
                row.update,
                row.timesteps,
                row.mean_reward.map(|m| format!("{m:.1}")).unwrap_or_else(|| "-".into()),
                row.policy_loss,
                row.value_loss,
                row.approx_kl,
                row.clip_frac,
                row.entropy,
                row.seconds,
            );
            Ok(())
        })
        .unwrap();
    println!("train time: {:.1}s", started.elapsed().as_secs_f64());

    let det = evaluate(&trainer.policy, env, 100, EvalMode::Deterministic, 1000);
    let sto = evaluate(&trainer.policy, env, 100, EvalMode::Stochastic, 1000);
    let base = random_action_baseline(env, 100, 2000);
    println!(
        "eval  det: mean {:.2} std {:.2} min {:.2} max {:.2} progress+ {:.2}",
        det.mean, det.std, det.min, det.max, det.positive_progress_fraction
    );
    println!(
        "eval  sto: mean {:.2} std {:.2} progress+ {:.2}",
        sto.mean, sto.std, sto.positive_progress_fraction
    );
    println!(
        "base rand: mean {:.2} std {:.2} progress+ {:.2}  margin/std {:.2}",
        base.mean,
        base.std,
        base.positive_progress_fraction,
        (det.mean - base.mean) / base.std
    );
}
