//! Adam with bias correction, plus global-norm gradient clipping.

use crate::tensor::Tensor;

pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Step counter; bias correction uses 1 - beta^t.
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn for_params(params: &[Tensor]) -> Adam {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
        }
    }

    /// One update: theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
    /// Parameters without a populated gradient are treated as zero-gradient.
    pub fn step(&mut self, params: &[Tensor], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "optimizer/parameter mismatch");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (idx, p) in params.iter().enumerate() {
            let grad = p.grad().unwrap_or_else(|| vec![0.0; p.numel()]);
            let mut data = p.to_vec();
            let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
            for i in 0..data.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                data[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            p.set_data(&data);
        }
    }
}

/// Scale all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm(params: &[Tensor], max_norm: f64) -> f64 {
    let mut sq = 0.0;
    for p in params {
        if let Some(g) = p.grad() {
            sq += g.iter().map(|v| v * v).sum::<f64>();
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for p in params {
            if let Some(g) = p.grad() {
                let scaled: Vec<f64> = g.iter().map(|v| v * scale).collect();
                p.zero_grad();
                p.accumulate_grad(&scaled);
            }
        }
    }
    norm
}
