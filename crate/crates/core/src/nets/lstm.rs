//! Recurrent policy: a single LSTM cell unrolled over time, an MLP projection
//! head from the hidden state to the action mean, and a value head on the
//! LSTM output. Hidden and cell states reset to zero at episode boundaries.

use super::init::{const_param, orthogonal, zeros_param, GAIN_ACTION, GAIN_HIDDEN, GAIN_VALUE};
use super::{lookup, tensor_from, PROJ_HIDDEN};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{Tape, Tensor, TensorError};

/// Hidden and cell state carried between timesteps; plain data so buffers can
/// store one per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl RecurrentState {
    pub fn zeros(hidden: usize) -> RecurrentState {
        RecurrentState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().chain(&self.c).all(|&v| v == 0.0)
    }
}

/// Result of unrolling the policy over a contiguous sequence.
pub struct SeqForward {
    /// Per-step action means, [T x act].
    pub means: Tensor,
    /// Per-step values, [T x 1].
    pub values: Tensor,
    /// State *entering* each step (what a rollout buffer stores).
    pub states: Vec<RecurrentState>,
    /// State after the final step (bootstrap input).
    pub final_state: RecurrentState,
}

pub struct LstmPolicy {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: usize,
    // gate weights: input projections [obs x H]
    pub w_ii: Tensor,
    pub w_if: Tensor,
    pub w_ig: Tensor,
    pub w_io: Tensor,
    // recurrent projections [H x H]
    pub w_hi: Tensor,
    pub w_hf: Tensor,
    pub w_hg: Tensor,
    pub w_ho: Tensor,
    // gate biases [H]; forget gate starts at +1
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_g: Tensor,
    pub b_o: Tensor,
    // projection MLP to the action mean
    pub w_p: Tensor,
    pub b_p: Tensor,
    pub w_mu: Tensor,
    pub b_mu: Tensor,
    // value head on the LSTM output
    pub w_v: Tensor,
    pub b_v: Tensor,
    pub log_std: Tensor,
}

impl LstmPolicy {
    pub fn init(obs_dim: usize, act_dim: usize, hidden: usize, seed: u64) -> LstmPolicy {
        assert!(obs_dim > 0 && act_dim > 0 && hidden > 0);
        let mut rng = stream_rng(seed, Stream::Init);
        LstmPolicy {
            obs_dim,
            act_dim,
            hidden,
            w_ii: orthogonal(obs_dim, hidden, GAIN_HIDDEN, &mut rng),
            w_if: orthogonal(obs_dim, hidden, GAIN_HIDDEN, &mut rng),
            w_ig: orthogonal(obs_dim, hidden, GAIN_HIDDEN, &mut rng),
            w_io: orthogonal(obs_dim, hidden, GAIN_HIDDEN, &mut rng),
            w_hi: orthogonal(hidden, hidden, GAIN_HIDDEN, &mut rng),
            w_hf: orthogonal(hidden, hidden, GAIN_HIDDEN, &mut rng),
            w_hg: orthogonal(hidden, hidden, GAIN_HIDDEN, &mut rng),
            w_ho: orthogonal(hidden, hidden, GAIN_HIDDEN, &mut rng),
            b_i: zeros_param(vec![hidden]),
            b_f: const_param(vec![hidden], 1.0),
            b_g: zeros_param(vec![hidden]),
            b_o: zeros_param(vec![hidden]),
            w_p: orthogonal(hidden, PROJ_HIDDEN, GAIN_HIDDEN, &mut rng),
            b_p: zeros_param(vec![PROJ_HIDDEN]),
            w_mu: orthogonal(PROJ_HIDDEN, act_dim, GAIN_ACTION, &mut rng),
            b_mu: zeros_param(vec![act_dim]),
            w_v: orthogonal(hidden, 1, GAIN_VALUE, &mut rng),
            b_v: zeros_param(vec![1]),
            log_std: zeros_param(vec![act_dim]),
        }
    }

    pub fn params(&self) -> Vec<(&'static str, Tensor)> {
        vec![
            ("w_ii", self.w_ii.clone()),
            ("w_if", self.w_if.clone()),
            ("w_ig", self.w_ig.clone()),
            ("w_io", self.w_io.clone()),
            ("w_hi", self.w_hi.clone()),
            ("w_hf", self.w_hf.clone()),
            ("w_hg", self.w_hg.clone()),
            ("w_ho", self.w_ho.clone()),
            ("b_i", self.b_i.clone()),
            ("b_f", self.b_f.clone()),
            ("b_g", self.b_g.clone()),
            ("b_o", self.b_o.clone()),
            ("w_p", self.w_p.clone()),
            ("b_p", self.b_p.clone()),
            ("w_mu", self.w_mu.clone()),
            ("b_mu", self.b_mu.clone()),
            ("w_v", self.w_v.clone()),
            ("b_v", self.b_v.clone()),
            ("log_std", self.log_std.clone()),
        ]
    }

    pub fn from_entries(entries: &[(String, Vec<usize>, Vec<f64>)]) -> Result<LstmPolicy, String> {
        let w_ii = tensor_from(lookup(entries, "w_ii")?)?;
        let w_hi = tensor_from(lookup(entries, "w_hi")?)?;
        let log_std = tensor_from(lookup(entries, "log_std")?)?;
        let obs_dim = w_ii.shape()[0];
        let hidden = w_hi.shape()[0];
        let p = LstmPolicy {
            obs_dim,
            act_dim: log_std.numel(),
            hidden,
            w_ii,
            w_if: tensor_from(lookup(entries, "w_if")?)?,
            w_ig: tensor_from(lookup(entries, "w_ig")?)?,
            w_io: tensor_from(lookup(entries, "w_io")?)?,
            w_hi,
            w_hf: tensor_from(lookup(entries, "w_hf")?)?,
            w_hg: tensor_from(lookup(entries, "w_hg")?)?,
            w_ho: tensor_from(lookup(entries, "w_ho")?)?,
            b_i: tensor_from(lookup(entries, "b_i")?)?,
            b_f: tensor_from(lookup(entries, "b_f")?)?,
            b_g: tensor_from(lookup(entries, "b_g")?)?,
            b_o: tensor_from(lookup(entries, "b_o")?)?,
            w_p: tensor_from(lookup(entries, "w_p")?)?,
            b_p: tensor_from(lookup(entries, "b_p")?)?,
            w_mu: tensor_from(lookup(entries, "w_mu")?)?,
            b_mu: tensor_from(lookup(entries, "b_mu")?)?,
            w_v: tensor_from(lookup(entries, "w_v")?)?,
            b_v: tensor_from(lookup(entries, "b_v")?)?,
            log_std,
        };
        Ok(p)
    }

    fn gate(
        &self,
        tape: &mut Tape,
        x: &Tensor,
        h: &Tensor,
        w_x: &Tensor,
        w_h: &Tensor,
        b: &Tensor,
    ) -> Result<Tensor, TensorError> {
        let xs = tape.matmul(x, w_x)?;
        let hs = tape.matmul(h, w_h)?;
        let z = tape.add(&xs, &hs)?;
        tape.add_row(&z, b)
    }

    /// One cell step on tape tensors: x [1 x obs], h/c [1 x H] -> (h', c').
    /// Standard gates: i,f,o sigmoid; g tanh; c' = f*c + i*g; h' = o*tanh(c').
    pub fn cell(
        &self,
        tape: &mut Tape,
        x: &Tensor,
        h: &Tensor,
        c: &Tensor,
    ) -> Result<(Tensor, Tensor), TensorError> {
        let zi = self.gate(tape, x, h, &self.w_ii, &self.w_hi, &self.b_i)?;
        let i = tape.sigmoid(&zi);
        let zf = self.gate(tape, x, h, &self.w_if, &self.w_hf, &self.b_f)?;
        let f = tape.sigmoid(&zf);
        let zg = self.gate(tape, x, h, &self.w_ig, &self.w_hg, &self.b_g)?;
        let g = tape.tanh(&zg);
        let zo = self.gate(tape, x, h, &self.w_io, &self.w_ho, &self.b_o)?;
        let o = tape.sigmoid(&zo);
        let fc = tape.mul(&f, c)?;
        let ig = tape.mul(&i, &g)?;
        let c_next = tape.add(&fc, &ig)?;
        let tc = tape.tanh(&c_next);
        let h_next = tape.mul(&o, &tc)?;
        Ok((h_next, c_next))
    }

    /// One step from plain state data; returns the new plain state.
    pub fn step(
        &self,
        tape: &mut Tape,
        obs: &[f64],
        state: &RecurrentState,
    ) -> Result<(Tensor, RecurrentState), TensorError> {
        let x = Tensor::new(vec![1, self.obs_dim], obs.to_vec())?;
        let h = Tensor::new(vec![1, self.hidden], state.h.clone())?;
        let c = Tensor::new(vec![1, self.hidden], state.c.clone())?;
        let (h_next, c_next) = self.cell(tape, &x, &h, &c)?;
        let next = RecurrentState {
            h: h_next.to_vec(),
            c: c_next.to_vec(),
        };
        Ok((h_next, next))
    }

    fn heads(
        &self,
        tape: &mut Tape,
        h: &Tensor,
        value_through_torso: bool,
    ) -> Result<(Tensor, Tensor), TensorError> {
        let zp = tape.matmul(h, &self.w_p)?;
        let zp = tape.add_row(&zp, &self.b_p)?;
        let hp = tape.tanh(&zp);
        let mu = tape.matmul(&hp, &self.w_mu)?;
        let mean = tape.add_row(&mu, &self.b_mu)?;
        let feat = if value_through_torso { h.clone() } else { h.detach() };
        let v = tape.matmul(&feat, &self.w_v)?;
        let value = tape.add_row(&v, &self.b_v)?;
        Ok((mean, value))
    }

    /// Rollout-path step: mean and value as plain data plus the next state.
    pub fn step_with_heads(
        &self,
        tape: &mut Tape,
        obs: &[f64],
        state: &RecurrentState,
    ) -> Result<(Vec<f64>, f64, RecurrentState), TensorError> {
        let (h_next, next) = self.step(tape, obs, state)?;
        let (mean, value) = self.heads(tape, &h_next, false)?;
        Ok((mean.to_vec(), value.item(), next))
    }

    /// Unroll over a contiguous stretch of transitions. `dones[t]` marks the
    /// end of an episode at step t, so the state entering t+1 is zeroed.
    /// With `dones` all false this is the plain T-step unroll.
    pub fn forward_sequence(
        &self,
        tape: &mut Tape,
        obs: &[Vec<f64>],
        init: &RecurrentState,
        dones: &[bool],
        value_through_torso: bool,
    ) -> Result<SeqForward, TensorError> {
        assert!(!obs.is_empty(), "forward_sequence needs T >= 1");
        assert_eq!(obs.len(), dones.len());
        let mut state = init.clone();
        let mut states = Vec::with_capacity(obs.len());
        let mut mean_rows = Vec::with_capacity(obs.len());
        let mut value_rows = Vec::with_capacity(obs.len());
        let mut h = Tensor::new(vec![1, self.hidden], state.h.clone())?;
        let mut c = Tensor::new(vec![1, self.hidden], state.c.clone())?;
        for (t, row) in obs.iter().enumerate() {
            states.push(state.clone());
            let x = Tensor::new(vec![1, self.obs_dim], row.clone())?;
            let (h_next, c_next) = self.cell(tape, &x, &h, &c)?;
            let (mean, value) = self.heads(tape, &h_next, value_through_torso)?;
            mean_rows.push(tape.reshape(&mean, vec![self.act_dim])?);
            value_rows.push(tape.reshape(&value, vec![1])?);
            if dones[t] {
                state = RecurrentState::zeros(self.hidden);
                h = Tensor::new(vec![1, self.hidden], state.h.clone())?;
                c = Tensor::new(vec![1, self.hidden], state.c.clone())?;
            } else {
                state = RecurrentState {
                    h: h_next.to_vec(),
                    c: c_next.to_vec(),
                };
                h = h_next;
                c = c_next;
            }
        }
        Ok(SeqForward {
            means: tape.stack(&mean_rows)?,
            values: tape.stack(&value_rows)?,
            states,
            final_state: state,
        })
    }
}
