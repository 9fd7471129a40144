//! Policy/value networks: the tanh-MLP baseline, the recurrent LSTM policy
//! with its MLP projection head, and the diagonal-Gaussian action head.

mod gaussian;
mod init;
mod lstm;
mod mlp;

pub use gaussian::{
    entropy, gaussian_kl, log_prob_batch, log_prob_scalar, sample_and_log_prob, GaussianAction,
};
pub use lstm::{LstmPolicy, RecurrentState, SeqForward};
pub use mlp::MlpPolicy;

use serde::{Deserialize, Serialize};

use crate::tensor::{Tape, Tensor, TensorError};

/// Baseline MLP hidden width; both hidden layers use it.
pub const MLP_HIDDEN: usize = 64;
/// Width of the LSTM projection head's hidden layer.
pub const PROJ_HIDDEN: usize = 64;
/// Default LSTM hidden/cell size (kept comparable to the MLP; configurable).
pub const LSTM_HIDDEN: usize = 64;
/// log-std is clamped to this range wherever a distribution is formed.
pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Mlp,
    Lstm,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mlp" => Ok(PolicyKind::Mlp),
            "lstm" => Ok(PolicyKind::Lstm),
            other => Err(format!("unknown policy '{other}' (valid: mlp, lstm)")),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyKind::Mlp => "mlp",
            PolicyKind::Lstm => "lstm",
        })
    }
}

/// A policy network of either architecture behind one interface.
pub enum Policy {
    Mlp(MlpPolicy),
    Lstm(LstmPolicy),
}

/// Plain, thread-safe snapshot of a parameter set. Used for checkpoints,
/// read-only rollout workers, and divergence rollback.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsData {
    pub kind: PolicyKind,
    pub entries: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl Policy {
    pub fn new(
        kind: PolicyKind,
        obs_dim: usize,
        act_dim: usize,
        lstm_hidden: usize,
        seed: u64,
    ) -> Policy {
        match kind {
            PolicyKind::Mlp => Policy::Mlp(MlpPolicy::init(obs_dim, act_dim, seed)),
            PolicyKind::Lstm => Policy::Lstm(LstmPolicy::init(obs_dim, act_dim, lstm_hidden, seed)),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Mlp(_) => PolicyKind::Mlp,
            Policy::Lstm(_) => PolicyKind::Lstm,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Policy::Mlp(p) => p.obs_dim,
            Policy::Lstm(p) => p.obs_dim,
        }
    }

    pub fn act_dim(&self) -> usize {
        match self {
            Policy::Mlp(p) => p.act_dim,
            Policy::Lstm(p) => p.act_dim,
        }
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self, Policy::Lstm(_))
    }

    pub fn lstm_hidden(&self) -> usize {
        match self {
            Policy::Mlp(_) => 0,
            Policy::Lstm(p) => p.hidden,
        }
    }

    pub fn log_std(&self) -> &Tensor {
        match self {
            Policy::Mlp(p) => &p.log_std,
            Policy::Lstm(p) => &p.log_std,
        }
    }

    /// Named parameters in canonical (checkpoint/optimizer) order.
    pub fn params(&self) -> Vec<(&'static str, Tensor)> {
        match self {
            Policy::Mlp(p) => p.params(),
            Policy::Lstm(p) => p.params(),
        }
    }

    pub fn param_tensors(&self) -> Vec<Tensor> {
        self.params().into_iter().map(|(_, t)| t).collect()
    }

    pub fn zero_grads(&self) {
        for (_, t) in self.params() {
            t.zero_grad();
        }
    }

    pub fn to_data(&self) -> ParamsData {
        ParamsData {
            kind: self.kind(),
            entries: self
                .params()
                .into_iter()
                .map(|(name, t)| (name.to_string(), t.shape(), t.to_vec()))
                .collect(),
        }
    }

    /// Rebuild a policy from a snapshot (shapes define the dimensions).
    pub fn from_data(data: &ParamsData) -> Result<Policy, String> {
        let policy = match data.kind {
            PolicyKind::Mlp => Policy::Mlp(MlpPolicy::from_entries(&data.entries)?),
            PolicyKind::Lstm => Policy::Lstm(LstmPolicy::from_entries(&data.entries)?),
        };
        Ok(policy)
    }

    /// Overwrite parameter values in place from a snapshot of the same shape.
    pub fn load_data(&self, data: &ParamsData) -> Result<(), String> {
        let params = self.params();
        if params.len() != data.entries.len() {
            return Err("parameter count mismatch".into());
        }
        for ((name, t), (dname, dshape, dvals)) in params.iter().zip(&data.entries) {
            if *name != dname.as_str() || t.shape() != *dshape {
                return Err(format!("parameter mismatch at '{dname}'"));
            }
            t.set_data(dvals);
        }
        Ok(())
    }

    /// Distribution mean and value for a batch of observations.
    /// `value_through_torso=false` severs the value head's gradient path into
    /// the shared features (policy-phase wiring); the auxiliary phase passes true.
    pub fn forward_batch(
        &self,
        tape: &mut Tape,
        obs: &Tensor,
        value_through_torso: bool,
    ) -> Result<(Tensor, Tensor), TensorError> {
        match self {
            Policy::Mlp(p) => p.forward(tape, obs, value_through_torso),
            Policy::Lstm(_) => panic!("forward_batch on a recurrent policy; use forward_sequence"),
        }
    }

    /// Single-observation forward used during rollouts and evaluation.
    /// Returns (mean, value, next recurrent state).
    pub fn act_forward(
        &self,
        tape: &mut Tape,
        obs: &[f64],
        state: Option<&RecurrentState>,
    ) -> (Vec<f64>, f64, Option<RecurrentState>) {
        match self {
            Policy::Mlp(p) => {
                let x = Tensor::new(vec![1, p.obs_dim], obs.to_vec()).expect("obs shape");
                let (mean, value) = p.forward(tape, &x, false).expect("mlp forward");
                (mean.to_vec(), value.item(), None)
            }
            Policy::Lstm(p) => {
                let st = state.expect("recurrent policy needs a state");
                let (mean, value, next) = p.step_with_heads(tape, obs, st).expect("lstm forward");
                (mean, value, Some(next))
            }
        }
    }
}

fn lookup<'a>(
    entries: &'a [(String, Vec<usize>, Vec<f64>)],
    name: &str,
) -> Result<&'a (String, Vec<usize>, Vec<f64>), String> {
    entries
        .iter()
        .find(|(n, _, _)| n == name)
        .ok_or_else(|| format!("missing parameter '{name}'"))
}

fn tensor_from(entry: &(String, Vec<usize>, Vec<f64>)) -> Result<Tensor, String> {
    Tensor::param(entry.1.clone(), entry.2.clone()).map_err(|e| e.to_string())
}
