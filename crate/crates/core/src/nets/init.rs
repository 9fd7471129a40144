//! Seeded parameter initialization.
//!
//! Orthogonal weight matrices (gain sqrt(2) on hidden layers, 0.01 on the
//! action-mean layer, 1.0 on the value layer), zero biases except the LSTM
//! forget gate at +1, and log-std starting at zero.

use rand_chacha::ChaCha8Rng;

use crate::rng::standard_normal;
use crate::tensor::Tensor;

pub const GAIN_HIDDEN: f64 = std::f64::consts::SQRT_2;
pub const GAIN_ACTION: f64 = 0.01;
pub const GAIN_VALUE: f64 = 1.0;

/// Orthogonal [rows x cols] matrix scaled by `gain`. For rows >= cols the
/// columns are orthonormal; otherwise the rows are (semi-orthogonal case).
pub fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let (n, m) = (rows.max(cols), rows.min(cols));
    let q = orthonormal_columns(n, m, rng);
    let mut data = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            // q is n x m column-major; transpose when rows < cols
            let v = if rows >= cols { q[c * n + r] } else { q[r * n + c] };
            data[r * cols + c] = gain * v;
        }
    }
    Tensor::param(vec![rows, cols], data).expect("orthogonal shape")
}

/// Modified Gram-Schmidt with re-orthogonalization over seeded normal draws;
/// returns n x m (n >= m) column-major with orthonormal columns.
fn orthonormal_columns(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert!(n >= m);
    let mut q = vec![0.0; n * m];
    for j in 0..m {
        loop {
            let mut col = standard_normal(rng, n);
            for _ in 0..2 {
                for i in 0..j {
                    let qi = &q[i * n..(i + 1) * n];
                    let dot: f64 = qi.iter().zip(&col).map(|(a, b)| a * b).sum();
                    for (c, &qv) in col.iter_mut().zip(qi) {
                        *c -= dot * qv;
                    }
                }
            }
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for (dst, c) in q[j * n..(j + 1) * n].iter_mut().zip(&col) {
                    *dst = c / norm;
                }
                break;
            }
        }
    }
    q
}

pub fn zeros_param(shape: Vec<usize>) -> Tensor {
    let numel = shape.iter().product();
    Tensor::param(shape, vec![0.0; numel]).expect("zeros shape")
}

pub fn const_param(shape: Vec<usize>, value: f64) -> Tensor {
    let numel = shape.iter().product();
    Tensor::param(shape, vec![value; numel]).expect("const shape")
}
