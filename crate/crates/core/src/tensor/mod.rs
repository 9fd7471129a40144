//! Dense f64 tensors with reverse-mode automatic differentiation.
//!
//! Tensors are row-major, 64-bit, and support no broadcasting beyond
//! scalar-by-tensor. Gradients are produced by recording ops on a [`Tape`]
//! (define-by-run) and walking it backward from a scalar loss.

mod tape;

pub use tape::Tape;

use std::cell::{Ref, RefCell};
use std::rc::Rc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("matmul: inner dimensions disagree, {lhs:?} x {rhs:?}")]
    MatmulMismatch { lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("log: input {value} outside domain (must be > 0)")]
    LogDomain { value: f64 },
    #[error("axis {axis} out of range for rank {rank}")]
    InvalidAxis { axis: usize, rank: usize },
    #[error("backward requires a scalar loss, got {numel} elements")]
    NonScalarLoss { numel: usize },
    #[error("loss tensor was not produced by this tape")]
    LossNotOnTape,
    #[error("data length {len} does not match shape {shape:?}")]
    DataShape { len: usize, shape: Vec<usize> },
    #[error("stack: rows must be rank-1 and equal length")]
    BadStack,
}

struct Inner {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
}

/// Shared handle to a tensor. Cloning is cheap and aliases the same storage.
#[derive(Clone)]
pub struct Tensor(Rc<RefCell<Inner>>);

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if numel != data.len() || shape.iter().any(|&d| d == 0) {
            return Err(TensorError::DataShape {
                len: data.len(),
                shape,
            });
        }
        Ok(Self::build(shape, data, false))
    }

    /// Leaf tensor that participates in gradient computation.
    pub fn param(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let t = Self::new(shape, data)?;
        t.0.borrow_mut().requires_grad = true;
        Ok(t)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self::build(shape, vec![0.0; numel], false)
    }

    pub fn scalar(v: f64) -> Self {
        Self::build(vec![1], vec![v], false)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(TensorError::BadStack);
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(vec![rows.len(), cols], data)
    }

    fn build(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Self {
        Tensor(Rc::new(RefCell::new(Inner {
            shape,
            data,
            grad: None,
            requires_grad,
        })))
    }

    pub(crate) fn result(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Self {
        Self::build(shape, data, requires_grad)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.0.borrow().shape.clone()
    }

    pub fn numel(&self) -> usize {
        self.0.borrow().data.len()
    }

    pub fn rank(&self) -> usize {
        self.0.borrow().shape.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.0.borrow().requires_grad
    }

    pub fn data(&self) -> Ref<'_, [f64]> {
        Ref::map(self.0.borrow(), |i| i.data.as_slice())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.borrow().data.clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        let inner = self.0.borrow();
        debug_assert_eq!(inner.data.len(), 1, "item() on non-scalar");
        inner.data[0]
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.borrow().grad.clone()
    }

    pub fn zero_grad(&self) {
        self.0.borrow_mut().grad = None;
    }

    /// Overwrite the stored values in place (shape is preserved).
    pub fn set_data(&self, data: &[f64]) {
        let mut inner = self.0.borrow_mut();
        assert_eq!(inner.data.len(), data.len(), "set_data length mismatch");
        inner.data.copy_from_slice(data);
    }

    /// Add `delta` to one element; used by finite-difference oracles and tests.
    pub fn nudge(&self, idx: usize, delta: f64) {
        self.0.borrow_mut().data[idx] += delta;
    }

    /// Copy of the values with gradient tracking severed.
    pub fn detach(&self) -> Tensor {
        let inner = self.0.borrow();
        Self::build(inner.shape.clone(), inner.data.clone(), false)
    }

    pub(crate) fn accumulate_grad(&self, contrib: &[f64]) {
        let mut inner = self.0.borrow_mut();
        match inner.grad.as_mut() {
            Some(g) => {
                for (gi, ci) in g.iter_mut().zip(contrib) {
                    *gi += ci;
                }
            }
            None => inner.grad = Some(contrib.to_vec()),
        }
    }

    /// Stable identity for gradient bookkeeping.
    pub(crate) fn id(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inner = self.0.borrow();
        f.debug_struct("Tensor")
            .field("shape", &inner.shape)
            .field("data", &inner.data)
            .field("requires_grad", &inner.requires_grad)
            .finish()
    }
}

/// Zero the gradients of a parameter set before an optimizer step.
pub fn zero_grads(params: &[Tensor]) {
    for p in params {
        p.zero_grad();
    }
}
