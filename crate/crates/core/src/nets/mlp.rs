//! Baseline policy: two 64-wide tanh hidden layers, a linear action-mean
//! head (unsquashed; environments clamp actions), a linear value head on the
//! second hidden layer, and a state-independent log-std vector.

use super::init::{orthogonal, zeros_param, GAIN_ACTION, GAIN_HIDDEN, GAIN_VALUE};
use super::{lookup, tensor_from, MLP_HIDDEN};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{Tape, Tensor, TensorError};

pub struct MlpPolicy {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w_mu: Tensor,
    pub b_mu: Tensor,
    pub w_v: Tensor,
    pub b_v: Tensor,
    pub log_std: Tensor,
}

impl MlpPolicy {
    pub fn init(obs_dim: usize, act_dim: usize, seed: u64) -> MlpPolicy {
        assert!(obs_dim > 0 && act_dim > 0);
        let h = MLP_HIDDEN;
        let mut rng = stream_rng(seed, Stream::Init);
        MlpPolicy {
            obs_dim,
            act_dim,
            w1: orthogonal(obs_dim, h, GAIN_HIDDEN, &mut rng),
            b1: zeros_param(vec![h]),
            w2: orthogonal(h, h, GAIN_HIDDEN, &mut rng),
            b2: zeros_param(vec![h]),
            w_mu: orthogonal(h, act_dim, GAIN_ACTION, &mut rng),
            b_mu: zeros_param(vec![act_dim]),
            w_v: orthogonal(h, 1, GAIN_VALUE, &mut rng),
            b_v: zeros_param(vec![1]),
            log_std: zeros_param(vec![act_dim]),
        }
    }

    pub fn params(&self) -> Vec<(&'static str, Tensor)> {
        vec![
            ("w1", self.w1.clone()),
            ("b1", self.b1.clone()),
            ("w2", self.w2.clone()),
            ("b2", self.b2.clone()),
            ("w_mu", self.w_mu.clone()),
            ("b_mu", self.b_mu.clone()),
            ("w_v", self.w_v.clone()),
            ("b_v", self.b_v.clone()),
            ("log_std", self.log_std.clone()),
        ]
    }

    pub fn from_entries(entries: &[(String, Vec<usize>, Vec<f64>)]) -> Result<MlpPolicy, String> {
        let w1 = tensor_from(lookup(entries, "w1")?)?;
        let shape = w1.shape();
        let log_std = tensor_from(lookup(entries, "log_std")?)?;
        let p = MlpPolicy {
            obs_dim: shape[0],
            act_dim: log_std.numel(),
            w1,
            b1: tensor_from(lookup(entries, "b1")?)?,
            w2: tensor_from(lookup(entries, "w2")?)?,
            b2: tensor_from(lookup(entries, "b2")?)?,
            w_mu: tensor_from(lookup(entries, "w_mu")?)?,
            b_mu: tensor_from(lookup(entries, "b_mu")?)?,
            w_v: tensor_from(lookup(entries, "w_v")?)?,
            b_v: tensor_from(lookup(entries, "b_v")?)?,
            log_std,
        };
        Ok(p)
    }

    /// (mean [batch x act], value [batch x 1]); the mean is left unsquashed.
    pub fn forward(
        &self,
        tape: &mut Tape,
        obs: &Tensor,
        value_through_torso: bool,
    ) -> Result<(Tensor, Tensor), TensorError> {
        let z1 = tape.matmul(obs, &self.w1)?;
        let z1 = tape.add_row(&z1, &self.b1)?;
        let h1 = tape.tanh(&z1);
        let z2 = tape.matmul(&h1, &self.w2)?;
        let z2 = tape.add_row(&z2, &self.b2)?;
        let h2 = tape.tanh(&z2);
        let mu = tape.matmul(&h2, &self.w_mu)?;
        let mean = tape.add_row(&mu, &self.b_mu)?;
        let feat = if value_through_torso { h2 } else { h2.detach() };
        let v = tape.matmul(&feat, &self.w_v)?;
        let value = tape.add_row(&v, &self.b_v)?;
        Ok((mean, value))
    }
}
