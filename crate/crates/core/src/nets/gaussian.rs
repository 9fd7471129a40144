//! Diagonal-Gaussian action distribution: reparameterized sampling,
//! log-density, entropy, and the closed-form KL used by the auxiliary phase.

use super::{LOG_STD_MAX, LOG_STD_MIN};
use crate::tensor::{Tape, Tensor, TensorError};

const LN_2PI: f64 = 1.8378770664093453;

/// A drawn action with its log-density under the drawing distribution.
#[derive(Debug, Clone)]
pub struct GaussianAction {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub sample: Vec<f64>,
    pub log_prob: f64,
}

/// Reparameterized draw x = mu + sigma * noise; the caller supplies the
/// standard-normal noise so sampling stays deterministic under seeds.
pub fn sample_and_log_prob(mean: &[f64], log_std: &[f64], noise: &[f64]) -> GaussianAction {
    debug_assert_eq!(mean.len(), log_std.len());
    debug_assert_eq!(mean.len(), noise.len());
    let clamped: Vec<f64> = log_std.iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
    let sample: Vec<f64> = mean
        .iter()
        .zip(&clamped)
        .zip(noise)
        .map(|((&m, &ls), &n)| m + ls.exp() * n)
        .collect();
    let log_prob = log_prob_scalar(mean, &clamped, &sample);
    GaussianAction {
        mean: mean.to_vec(),
        log_std: clamped,
        sample,
        log_prob,
    }
}

/// Log-density of `x`; mirrors the tape computation order so rollout-time
/// values agree with training-time recomputation.
pub fn log_prob_scalar(mean: &[f64], log_std_clamped: &[f64], x: &[f64]) -> f64 {
    let d = mean.len() as f64;
    let mut ssq = 0.0;
    for ((&m, &ls), &v) in mean.iter().zip(log_std_clamped).zip(x) {
        let z = (v - m) * (-ls).exp();
        ssq += z * z;
    }
    let sum_ls: f64 = log_std_clamped.iter().sum();
    -0.5 * ssq - 0.5 * d * LN_2PI - sum_ls
}

/// Tape version over a batch: mean [b x d], actions [b x d], log_std [d]
/// -> log-probs [b]. Gradients flow to mean and log_std.
pub fn log_prob_batch(
    tape: &mut Tape,
    mean: &Tensor,
    log_std: &Tensor,
    actions: &Tensor,
) -> Result<Tensor, TensorError> {
    let d = log_std.numel() as f64;
    let clamped = tape.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX);
    let neg_ls = tape.neg(&clamped);
    let inv_sigma = tape.exp(&neg_ls);
    let diff = tape.sub(actions, mean)?;
    let z = tape.mul_row(&diff, &inv_sigma)?;
    let z2 = tape.mul(&z, &z)?;
    let ssq = tape.sum_axis(&z2, 1)?;
    let half = tape.affine(&ssq, -0.5, -0.5 * d * LN_2PI);
    let sum_ls = tape.sum(&clamped);
    let neg_sum = tape.neg(&sum_ls);
    tape.add_scalar_t(&half, &neg_sum)
}

/// Differential entropy: sum_d [log_std_d + 0.5 * log(2*pi*e)].
pub fn entropy(tape: &mut Tape, log_std: &Tensor) -> Tensor {
    let d = log_std.numel() as f64;
    let clamped = tape.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX);
    let s = tape.sum(&clamped);
    tape.affine(&s, 1.0, 0.5 * d * (LN_2PI + 1.0))
}

/// Mean closed-form KL(old || new) between diagonal Gaussians over a batch.
/// Old parameters are constants; gradients flow into the new distribution.
/// Per sample: sum_d [ log(s2/s1) + (s1^2 + (m1-m2)^2) / (2 s2^2) - 1/2 ].
///
/// The variance ratio is computed as exp(2*(ls1-ls2)) so identical
/// distributions give exactly zero.
pub fn gaussian_kl(
    tape: &mut Tape,
    old_mean: &Tensor,
    old_log_std: &Tensor,
    new_mean: &Tensor,
    new_log_std: &Tensor,
) -> Result<Tensor, TensorError> {
    let d = new_log_std.numel() as f64;
    let ls2 = tape.clamp(new_log_std, LOG_STD_MIN, LOG_STD_MAX);
    let ls1: Vec<f64> = old_log_std
        .data()
        .iter()
        .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
        .collect();
    let ls1_sum: f64 = ls1.iter().sum();
    let ls1_t = Tensor::new(vec![ls1.len()], ls1)?;

    // sum_d log(s2/s1)
    let ls2_sum = tape.sum(&ls2);
    let log_ratio = tape.affine(&ls2_sum, 1.0, -ls1_sum);

    // 0.5 * sum_d (s1/s2)^2 via exp(2*(ls1 - ls2))
    let dls = tape.sub(&ls1_t, &ls2)?;
    let two_dls = tape.affine(&dls, 2.0, 0.0);
    let ratio2 = tape.exp(&two_dls);
    let ratio2_sum = tape.sum(&ratio2);

    // 0.5 * mean_b sum_d (m1 - m2)^2 / s2^2
    let diff = tape.sub(old_mean, new_mean)?;
    let diff2 = tape.mul(&diff, &diff)?;
    let neg2ls2 = tape.affine(&ls2, -2.0, 0.0);
    let inv_var2 = tape.exp(&neg2ls2);
    let scaled = tape.mul_row(&diff2, &inv_var2)?;
    let per_sample = tape.sum_axis(&scaled, 1)?;
    let quad_mean = tape.mean(&per_sample);

    let var_terms = tape.add(&ratio2_sum, &quad_mean)?;
    let half = tape.affine(&var_terms, 0.5, -0.5 * d);
    let total = tape.add(&log_ratio, &half)?;
    Ok(total)
}
