//! The train loop: collect, estimate advantages, update (PPO or PPG phases),
//! checkpoint on cadence, and emit one metrics row per update. The whole
//! mutable run state round-trips through the checkpoint format, so a resumed
//! run continues the interrupted one bit for bit.

use std::path::{Path, PathBuf};
use std::time::Instant;

use super::checkpoint::{load, save, Checkpoint, CheckpointError};
use super::collect::Collector;
use super::HarnessError;
use crate::config::TrainConfig;
use crate::envs::make_env;
use crate::learn::{
    compute_gae, ppg_auxiliary_phase, ppg_policy_phase, ppo_update, Adam, Algo, AuxStore,
};
use crate::nets::{ParamsData, Policy, PolicyKind, RecurrentState};

/// One per-update metrics record (the CSV row schema lives in the CLI).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub update: u64,
    pub timesteps: u64,
    /// Rolling mean over the last 100 finished episodes; absent until one
    /// episode has finished.
    pub mean_reward: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub approx_kl: f64,
    /// Joint auxiliary loss; present only on updates where a PPG auxiliary
    /// phase ran.
    pub aux_loss: Option<f64>,
    pub seconds: f64,
}

pub struct Trainer {
    pub config: TrainConfig,
    pub policy: Policy,
    pub adam: Adam,
    pub collector: Collector,
    pub aux_store: AuxStore,
    pub update_index: u64,
    pub policy_phase_count: u64,
    pub aux_round: u64,
    pub divergence_events: u64,
    started: Instant,
    base_seconds: f64,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Trainer, HarnessError> {
        config.validate()?;
        let probe = make_env(config.env);
        let (obs_dim, act_dim) = (probe.obs_dim(), probe.act_dim());
        let policy = Policy::new(config.policy, obs_dim, act_dim, config.lstm_hidden, config.seed);
        let adam = Adam::for_params(&policy.param_tensors());
        let collector = Collector::new(
            config.env,
            config.parallel_envs,
            config.seed,
            policy.is_recurrent().then(|| policy.lstm_hidden()),
            config.parallel_collect,
        );
        let aux_store = AuxStore::new(obs_dim, act_dim);
        Ok(Trainer {
            config,
            policy,
            adam,
            collector,
            aux_store,
            update_index: 0,
            policy_phase_count: 0,
            aux_round: 0,
            divergence_events: 0,
            started: Instant::now(),
            base_seconds: 0.0,
        })
    }

    /// One update; `None` once the timestep budget is exhausted.
    pub fn step(&mut self) -> Result<Option<MetricsRow>, HarnessError> {
        if self.update_index >= self.config.total_updates() {
            return Ok(None);
        }
        let mut buffer = self.collector.collect(&self.policy, self.config.ppo.horizon);
        compute_gae(&mut buffer, self.config.ppo.gamma, self.config.ppo.lam)?;

        let mut aux_loss = None;
        let metrics = match self.config.algo {
            Algo::Ppo => ppo_update(
                &self.policy,
                &mut buffer,
                &self.config.ppo,
                &mut self.adam,
                self.config.seed,
                self.update_index,
                self.config.stale_hidden,
            )?,
            Algo::Ppg => {
                let m = ppg_policy_phase(
                    &self.policy,
                    &mut buffer,
                    &self.config.ppo,
                    &mut self.adam,
                    self.config.seed,
                    self.update_index,
                    self.config.stale_hidden,
                    &mut self.aux_store,
                )?;
                self.policy_phase_count += 1;
                if !m.diverged && self.policy_phase_count % self.config.ppg.n_pi as u64 == 0 {
                    let am = ppg_auxiliary_phase(
                        &self.policy,
                        &mut self.aux_store,
                        &self.config.ppo,
                        &self.config.ppg,
                        &mut self.adam,
                        self.config.seed,
                        self.aux_round,
                    )?;
                    self.aux_round += 1;
                    if am.diverged {
                        self.divergence_events += 1;
                    } else {
                        aux_loss = Some(am.aux_loss);
                    }
                }
                m
            }
        };
        if metrics.diverged {
            self.divergence_events += 1;
        }
        self.update_index += 1;

        let row = MetricsRow {
            update: self.update_index,
            timesteps: self.update_index * self.config.steps_per_update(),
            mean_reward: self.collector.rolling_mean_reward(),
            policy_loss: metrics.policy_loss,
            value_loss: metrics.value_loss,
            entropy: metrics.entropy,
            clip_frac: metrics.clip_fraction,
            approx_kl: metrics.approx_kl,
            aux_loss,
            seconds: self.base_seconds + self.started.elapsed().as_secs_f64(),
        };

        if let Some(dir) = self.config.out_dir.clone() {
            if self.update_index % self.config.checkpoint_every == 0 {
                self.save_checkpoint(&dir.join(format!("ckpt_{:06}.ppgl", self.update_index)))?;
            }
        }
        Ok(Some(row))
    }

    /// Run to the configured budget, handing each row to `on_row`, then write
    /// the final checkpoint.
    pub fn run(
        &mut self,
        mut on_row: impl FnMut(&MetricsRow) -> std::io::Result<()>,
    ) -> Result<(), HarnessError> {
        while let Some(row) = self.step()? {
            on_row(&row)?;
        }
        if let Some(dir) = self.config.out_dir.clone() {
            self.save_checkpoint(&dir.join("final.ppgl"))?;
        }
        Ok(())
    }

    // ── Checkpointing ───────────────────────────────────────────────

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), HarnessError> {
        let mut arrays: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::new();
        for (name, shape, data) in self.policy.to_data().entries {
            arrays.push((format!("param/{name}"), shape, data));
        }
        arrays.push(("adam/t".into(), vec![1], vec![self.adam.t as f64]));
        for ((name, _), (m, v)) in self
            .policy
            .params()
            .iter()
            .zip(self.adam.m.iter().zip(self.adam.v.iter()))
        {
            arrays.push((format!("adam/m/{name}"), vec![m.len()], m.clone()));
            arrays.push((format!("adam/v/{name}"), vec![v.len()], v.clone()));
        }
        arrays.push(("run/update_index".into(), vec![1], vec![self.update_index as f64]));
        arrays.push((
            "run/policy_phase_count".into(),
            vec![1],
            vec![self.policy_phase_count as f64],
        ));
        arrays.push(("run/aux_round".into(), vec![1], vec![self.aux_round as f64]));
        arrays.push((
            "run/divergence_events".into(),
            vec![1],
            vec![self.divergence_events as f64],
        ));
        arrays.push((
            "run/seconds".into(),
            vec![1],
            vec![self.base_seconds + self.started.elapsed().as_secs_f64()],
        ));
        let finished: Vec<f64> = self.collector.finished.iter().copied().collect();
        arrays.push(("run/finished_rewards".into(), vec![finished.len()], finished));

        for (e, slot) in self.collector.slots.iter().enumerate() {
            let state = slot.env.state_vec();
            arrays.push((format!("env{e}/state"), vec![state.len()], state));
            arrays.push((format!("env{e}/obs"), vec![slot.obs.len()], slot.obs.clone()));
            arrays.push((
                format!("env{e}/counters"),
                vec![3],
                vec![
                    slot.episode_index as f64,
                    slot.step_count as f64,
                    slot.episode_reward,
                ],
            ));
            if let Some(state) = &slot.state {
                arrays.push((format!("env{e}/h"), vec![state.h.len()], state.h.clone()));
                arrays.push((format!("env{e}/c"), vec![state.c.len()], state.c.clone()));
            }
        }

        arrays.push((
            "aux/count".into(),
            vec![1],
            vec![self.aux_store.slabs.len() as f64],
        ));
        for (s, slab) in self.aux_store.slabs.iter().enumerate() {
            let n = slab.returns.len();
            arrays.push((
                format!("aux{s}/obs"),
                vec![n, self.aux_store.obs_dim],
                slab.observations.clone(),
            ));
            arrays.push((format!("aux{s}/returns"), vec![n], slab.returns.clone()));
            arrays.push((
                format!("aux{s}/dones"),
                vec![n],
                slab.dones.iter().map(|&d| d as u8 as f64).collect(),
            ));
            arrays.push((
                format!("aux{s}/old_means"),
                vec![n, self.aux_store.act_dim],
                slab.old_means.clone(),
            ));
            arrays.push((
                format!("aux{s}/old_log_std"),
                vec![slab.old_log_std.len()],
                slab.old_log_std.clone(),
            ));
            let seq: Vec<f64> = slab
                .sequences
                .iter()
                .flat_map(|r| [r.start as f64, r.end as f64])
                .collect();
            arrays.push((format!("aux{s}/seq"), vec![slab.sequences.len(), 2], seq));
            if let Some(states) = &slab.states {
                let hidden = states.first().map(|st| st.h.len()).unwrap_or(0);
                let h: Vec<f64> = states.iter().flat_map(|st| st.h.clone()).collect();
                let c: Vec<f64> = states.iter().flat_map(|st| st.c.clone()).collect();
                arrays.push((format!("aux{s}/states_h"), vec![n, hidden], h));
                arrays.push((format!("aux{s}/states_c"), vec![n, hidden], c));
            }
        }

        save(
            path,
            &Checkpoint {
                config_digest: self.config.digest(),
                arrays,
            },
        )?;
        Ok(())
    }

    /// Rebuild a trainer mid-run. The checkpoint must carry the digest of the
    /// exact configuration passed here.
    pub fn resume(config: TrainConfig, path: &Path) -> Result<Trainer, HarnessError> {
        let ckpt = load(path)?;
        if ckpt.config_digest != config.digest() {
            return Err(CheckpointError::ConfigMismatch.into());
        }
        let mut trainer = Trainer::new(config)?;

        let params = params_from_checkpoint(&ckpt)?;
        trainer
            .policy
            .load_data(&ParamsData {
                kind: trainer.policy.kind(),
                entries: params,
            })
            .map_err(CheckpointError::CorruptHeader)?;

        trainer.adam.t = ckpt.scalar("adam/t")? as u64;
        for (i, (name, _)) in trainer.policy.params().iter().enumerate() {
            trainer.adam.m[i] = ckpt.values(&format!("adam/m/{name}"))?.to_vec();
            trainer.adam.v[i] = ckpt.values(&format!("adam/v/{name}"))?.to_vec();
        }
        trainer.update_index = ckpt.scalar("run/update_index")? as u64;
        trainer.policy_phase_count = ckpt.scalar("run/policy_phase_count")? as u64;
        trainer.aux_round = ckpt.scalar("run/aux_round")? as u64;
        trainer.divergence_events = ckpt.scalar("run/divergence_events")? as u64;
        trainer.base_seconds = ckpt.scalar("run/seconds")?;
        trainer.started = Instant::now();
        trainer.collector.finished = ckpt.values("run/finished_rewards")?.iter().copied().collect();

        for (e, slot) in trainer.collector.slots.iter_mut().enumerate() {
            slot.env.restore_state(ckpt.values(&format!("env{e}/state"))?);
            slot.obs = ckpt.values(&format!("env{e}/obs"))?.to_vec();
            let counters = ckpt.values(&format!("env{e}/counters"))?;
            slot.episode_index = counters[0] as u64;
            slot.step_count = counters[1] as u64;
            slot.episode_reward = counters[2];
            if slot.state.is_some() {
                slot.state = Some(RecurrentState {
                    h: ckpt.values(&format!("env{e}/h"))?.to_vec(),
                    c: ckpt.values(&format!("env{e}/c"))?.to_vec(),
                });
            }
        }

        let n_slabs = ckpt.scalar("aux/count")? as usize;
        for s in 0..n_slabs {
            let n = ckpt.array(&format!("aux{s}/returns"))?.2.len();
            let dones: Vec<bool> = ckpt
                .values(&format!("aux{s}/dones"))?
                .iter()
                .map(|&v| v != 0.0)
                .collect();
            let seq_vals = ckpt.values(&format!("aux{s}/seq"))?;
            let sequences = seq_vals
                .chunks_exact(2)
                .map(|c| c[0] as usize..c[1] as usize)
                .collect();
            let states = if trainer.policy.is_recurrent() {
                let h = ckpt.values(&format!("aux{s}/states_h"))?;
                let c = ckpt.values(&format!("aux{s}/states_c"))?;
                let hidden = h.len() / n.max(1);
                Some(
                    (0..n)
                        .map(|i| RecurrentState {
                            h: h[i * hidden..(i + 1) * hidden].to_vec(),
                            c: c[i * hidden..(i + 1) * hidden].to_vec(),
                        })
                        .collect(),
                )
            } else {
                None
            };
            trainer.aux_store.slabs.push(crate::learn::AuxSlab {
                observations: ckpt.values(&format!("aux{s}/obs"))?.to_vec(),
                returns: ckpt.values(&format!("aux{s}/returns"))?.to_vec(),
                dones,
                states,
                sequences,
                old_means: ckpt.values(&format!("aux{s}/old_means"))?.to_vec(),
                old_log_std: ckpt.values(&format!("aux{s}/old_log_std"))?.to_vec(),
            });
        }
        Ok(trainer)
    }
}

/// Pull `param/...` entries out of a checkpoint in their stored order.
pub fn params_from_checkpoint(
    ckpt: &Checkpoint,
) -> Result<Vec<(String, Vec<usize>, Vec<f64>)>, CheckpointError> {
    let entries: Vec<(String, Vec<usize>, Vec<f64>)> = ckpt
        .arrays
        .iter()
        .filter(|(n, _, _)| n.starts_with("param/"))
        .map(|(n, s, d)| (n["param/".len()..].to_string(), s.clone(), d.clone()))
        .collect();
    if entries.is_empty() {
        return Err(CheckpointError::MissingArray("param/*".into()));
    }
    Ok(entries)
}

/// Rebuild just the policy from a checkpoint (the eval path); architecture
/// inferred from the stored parameter names.
pub fn policy_from_checkpoint(ckpt: &Checkpoint) -> Result<Policy, CheckpointError> {
    let entries = params_from_checkpoint(ckpt)?;
    let kind = if entries.iter().any(|(n, _, _)| n == "w_ii") {
        PolicyKind::Lstm
    } else {
        PolicyKind::Mlp
    };
    Policy::from_data(&ParamsData { kind, entries }).map_err(CheckpointError::CorruptHeader)
}

/// Training outputs land in this directory layout.
pub fn default_out_dir(config: &TrainConfig) -> PathBuf {
    PathBuf::from("runs").join(format!(
        "{}_{}_{}_s{}",
        config.env, config.algo, config.policy, config.seed
    ))
}
