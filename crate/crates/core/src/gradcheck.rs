//! Finite-difference gradient oracle.
//!
//! Central differences over a forward-only evaluation, independent of the
//! tape's backward rules, so it can arbitrate them.

use crate::tensor::{Tape, Tensor};

/// Central-difference step matching the documented gradient tolerances.
pub const FD_STEP: f64 = 1e-5;

/// Numerical gradient of `f` with respect to every element of `param`.
/// `f` must evaluate the scalar loss from current parameter values without
/// touching any recorded tape (a fresh no-grad tape is supplied per call).
pub fn fd_gradient(param: &Tensor, mut f: impl FnMut(&mut Tape) -> f64) -> Vec<f64> {
    let n = param.numel();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        param.nudge(i, FD_STEP);
        let hi = f(&mut Tape::no_grad());
        param.nudge(i, -2.0 * FD_STEP);
        let lo = f(&mut Tape::no_grad());
        param.nudge(i, FD_STEP);
        grad[i] = (hi - lo) / (2.0 * FD_STEP);
    }
    grad
}

/// Worst elementwise deviation between analytic and numerical gradients:
/// relative error, with an absolute-error fallback near zero.
pub fn max_grad_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let abs = (a - n).abs();
            if abs < 1e-8 {
                0.0
            } else {
                abs / a.abs().max(n.abs()).max(1e-8)
            }
        })
        .fold(0.0, f64::max)
}
