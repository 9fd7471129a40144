//! Generalized advantage estimation and the per-minibatch standardization.

use super::{LearnError, RolloutBuffer};

/// GAE over one env stream, computed backward:
///   delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
///   A_t     = delta_t + gamma * lam * (1 - done_t) * A_{t+1}
/// `last_value` bootstraps V(s_N) for a non-terminal tail (0 if terminal).
/// Returns (advantages, returns) with returns_t = A_t + V(s_t).
pub fn gae_1d(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lam: f64,
) -> Result<(Vec<f64>, Vec<f64>), LearnError> {
    let n = rewards.len();
    if n == 0 {
        return Err(LearnError::EmptyBuffer);
    }
    debug_assert_eq!(values.len(), n);
    debug_assert_eq!(dones.len(), n);
    let mut advantages = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let delta = rewards[t] + gamma * next_value * not_done - values[t];
        carry = delta + gamma * lam * not_done * carry;
        advantages[t] = carry;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

/// Populate `buffer.advantages` / `buffer.returns`, one env segment at a time
/// using each segment's recorded bootstrap value.
pub fn compute_gae(buffer: &mut RolloutBuffer, gamma: f64, lam: f64) -> Result<(), LearnError> {
    if buffer.is_empty() {
        return Err(LearnError::EmptyBuffer);
    }
    let mut advantages = vec![0.0; buffer.len()];
    let mut returns = vec![0.0; buffer.len()];
    for seg in &buffer.segments {
        let range = seg.start..seg.start + seg.len;
        let (adv, ret) = gae_1d(
            &buffer.rewards[range.clone()],
            &buffer.values[range.clone()],
            &buffer.dones[range.clone()],
            seg.bootstrap_value,
            gamma,
            lam,
        )?;
        advantages[range.clone()].copy_from_slice(&adv);
        returns[range].copy_from_slice(&ret);
    }
    buffer.advantages = advantages;
    buffer.returns = returns;
    Ok(())
}

/// Standardize to zero mean / unit std (epsilon-guarded). A single element is
/// returned unchanged since there is nothing to standardize against.
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    if advantages.len() < 2 {
        log::warn!("normalize_advantages on {} element(s); returning unchanged", advantages.len());
        return advantages.to_vec();
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + 1e-8;
    advantages.iter().map(|a| (a - mean) / denom).collect()
}
