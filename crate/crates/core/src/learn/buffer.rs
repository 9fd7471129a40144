//! Fixed-horizon on-policy experience store. Transitions are laid out
//! env-major: each parallel env contributes one contiguous segment, so the
//! buffer equals the concatenation of per-env sequential collections.

use crate::nets::RecurrentState;

/// One env's contiguous block plus its tail bootstrap value V(s_N)
/// (zero when the final transition ended its episode).
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
    pub bootstrap_value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub act_dim: usize,
    /// [N x obs_dim], row-major.
    pub observations: Vec<f64>,
    /// [N x act_dim], row-major.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    /// State entering each step; `Some` only for recurrent policies.
    pub recurrent_states: Option<Vec<RecurrentState>>,
    /// Populated by `compute_gae`.
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl RolloutBuffer {
    pub fn new(obs_dim: usize, act_dim: usize, recurrent: bool) -> RolloutBuffer {
        RolloutBuffer {
            obs_dim,
            act_dim,
            recurrent_states: recurrent.then(Vec::new),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn obs_row(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action_row(&self, i: usize) -> &[f64] {
        &self.actions[i * self.act_dim..(i + 1) * self.act_dim]
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        obs: &[f64],
        action: &[f64],
        log_prob: f64,
        reward: f64,
        done: bool,
        value: f64,
        state: Option<RecurrentState>,
    ) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        debug_assert_eq!(action.len(), self.act_dim);
        self.observations.extend_from_slice(obs);
        self.actions.extend_from_slice(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.dones.push(done);
        self.values.push(value);
        if let Some(states) = self.recurrent_states.as_mut() {
            states.push(state.expect("recurrent buffer needs states"));
        }
    }

    /// Close the current env segment, recording its tail bootstrap.
    pub fn seal_segment(&mut self, bootstrap_value: f64) {
        let start = self.segments.iter().map(|s| s.start + s.len).max().unwrap_or(0);
        let len = self.len() - start;
        self.segments.push(Segment {
            start,
            len,
            bootstrap_value,
        });
    }

    /// Append another buffer as additional segments (parallel assembly).
    pub fn append(&mut self, mut other: RolloutBuffer) {
        let offset = self.len();
        self.observations.append(&mut other.observations);
        self.actions.append(&mut other.actions);
        self.log_probs.append(&mut other.log_probs);
        self.rewards.append(&mut other.rewards);
        self.dones.append(&mut other.dones);
        self.values.append(&mut other.values);
        self.advantages.append(&mut other.advantages);
        self.returns.append(&mut other.returns);
        if let (Some(a), Some(b)) = (self.recurrent_states.as_mut(), other.recurrent_states.as_mut())
        {
            a.append(b);
        }
        for seg in other.segments {
            self.segments.push(Segment {
                start: seg.start + offset,
                ..seg
            });
        }
    }

    /// Indices where episodes begin: each segment head plus every index
    /// following a terminal step.
    pub fn episode_starts(&self) -> Vec<usize> {
        let mut starts = Vec::new();
        for seg in &self.segments {
            starts.push(seg.start);
            for i in seg.start..seg.start + seg.len {
                if self.dones[i] && i + 1 < seg.start + seg.len {
                    starts.push(i + 1);
                }
            }
        }
        starts
    }

    /// Contiguous stretches that never cross an episode boundary or an env
    /// segment boundary; the unit the recurrent machinery unrolls over.
    pub fn sequences(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        for seg in &self.segments {
            let mut start = seg.start;
            for i in seg.start..seg.start + seg.len {
                if self.dones[i] {
                    runs.push(start..i + 1);
                    start = i + 1;
                }
            }
            if start < seg.start + seg.len {
                runs.push(start..seg.start + seg.len);
            }
        }
        runs
    }

    /// Sequences further split to at most `chunk_len` steps (minibatch units).
    pub fn chunks(&self, chunk_len: usize) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        for run in self.sequences() {
            let mut s = run.start;
            while s < run.end {
                let e = (s + chunk_len).min(run.end);
                out.push(s..e);
                s = e;
            }
        }
        out
    }
}
