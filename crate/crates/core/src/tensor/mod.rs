//! Dense f64 tensor core with reverse-mode automatic differentiation.
//!
//! Tensors are rank-1 or rank-2, row-major. A [`ComputationRecord`] captures
//! every primitive executed through it (define-by-run) and replays the list
//! in reverse to accumulate gradients into `requires_grad` leaves.

mod adam;
pub mod gradcheck;
mod record;

pub use adam::{zero_grads, AdamState};
pub use record::{
    Activation, ComputationRecord, ElementwiseOp, Reduction, LOG_CLAMP_EPS,
};

use std::cell::{Ref, RefCell, RefMut};
use std::rc::Rc;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Post-op finiteness checks. Defaults to on; the `TIDGAN_FINITE_CHECKS`
/// environment variable (`0`/`false` to disable) sets the initial state.
static FINITE_CHECKS: OnceLock<AtomicBool> = OnceLock::new();

fn finite_checks_cell() -> &'static AtomicBool {
    FINITE_CHECKS.get_or_init(|| {
        let on = match std::env::var("TIDGAN_FINITE_CHECKS") {
            Ok(v) => !matches!(v.as_str(), "0" | "false" | "off"),
            Err(_) => true,
        };
        AtomicBool::new(on)
    })
}

pub fn finite_checks_enabled() -> bool {
    finite_checks_cell().load(Ordering::Relaxed)
}

pub fn set_finite_checks(on: bool) {
    finite_checks_cell().store(on, Ordering::Relaxed);
}

pub(crate) struct Inner {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Vec<f64>,
    pub(crate) requires_grad: bool,
    pub(crate) grad: Option<Vec<f64>>,
    /// Set when this tensor is the output of a recorded op: (record id, step index).
    pub(crate) node: Option<(u64, usize)>,
}

/// A dense tensor handle. Cloning is cheap and shares storage.
#[derive(Clone)]
pub struct Tensor(Rc<RefCell<Inner>>);

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

fn validate_shape(shape: &[usize], data: &[f64]) -> Result<()> {
    if shape.is_empty() || shape.len() > 2 {
        return Err(Error::Dimension(format!(
            "tensor rank must be 1 or 2, got shape {shape:?}"
        )));
    }
    let numel: usize = shape.iter().product();
    if numel != data.len() {
        return Err(Error::Dimension(format!(
            "shape {shape:?} implies {numel} elements, data has {}",
            data.len()
        )));
    }
    if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericDomain(format!(
            "non-finite value {bad} in tensor data"
        )));
    }
    Ok(())
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
        validate_shape(&shape, &data)?;
        Ok(Tensor(Rc::new(RefCell::new(Inner {
            shape,
            data,
            requires_grad: false,
            grad: None,
            node: None,
        }))))
    }

    /// A trainable leaf: `requires_grad` set, gradient accumulated by backward.
    pub fn param(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
        let t = Tensor::new(shape, data)?;
        t.0.borrow_mut().requires_grad = true;
        Ok(t)
    }

    pub fn vector(data: Vec<f64>) -> Result<Tensor> {
        let n = data.len();
        Tensor::new(vec![n], data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Tensor> {
        if rows.is_empty() {
            return Err(Error::Input("from_rows: no rows".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "from_rows: row 0 has {cols} columns, row {i} has {}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Tensor::new(vec![rows.len(), cols], data)
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor::new(vec![1], vec![v]).expect("scalar is always valid")
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::new(shape, vec![0.0; n]).expect("zeros is always valid")
    }

    pub fn full(shape: Vec<usize>, v: f64) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        Tensor::new(shape, vec![v; n])
    }

    pub fn shape(&self) -> Vec<usize> {
        self.0.borrow().shape.clone()
    }

    /// (rows, cols); a rank-1 tensor of length n counts as 1 x n.
    pub fn dims(&self) -> (usize, usize) {
        let inner = self.0.borrow();
        match inner.shape.len() {
            1 => (1, inner.shape[0]),
            _ => (inner.shape[0], inner.shape[1]),
        }
    }

    pub fn rank(&self) -> usize {
        self.0.borrow().shape.len()
    }

    pub fn numel(&self) -> usize {
        self.0.borrow().data.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.borrow().data.clone()
    }

    pub fn item(&self) -> f64 {
        let inner = self.0.borrow();
        assert_eq!(inner.data.len(), 1, "item() on non-scalar tensor");
        inner.data[0]
    }

    pub fn value_at(&self, idx: usize) -> f64 {
        self.0.borrow().data[idx]
    }

    /// In-place slot write; finite-difference perturbation uses this.
    pub fn set_value_at(&self, idx: usize, v: f64) {
        self.0.borrow_mut().data[idx] = v;
    }

    pub fn requires_grad(&self) -> bool {
        self.0.borrow().requires_grad
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.borrow().grad.clone()
    }

    /// Resets the gradient buffer to zeros (keeps it allocated).
    pub fn zero_grad(&self) {
        let mut inner = self.0.borrow_mut();
        let n = inner.data.len();
        inner.grad = Some(vec![0.0; n]);
    }

    /// A fresh constant tensor with the same shape and values, cut off from
    /// any record (no gradient will flow through it).
    pub fn detached(&self) -> Tensor {
        let inner = self.0.borrow();
        Tensor::new(inner.shape.clone(), inner.data.clone()).expect("detach of valid tensor")
    }

    pub(crate) fn inner(&self) -> Ref<'_, Inner> {
        self.0.borrow()
    }

    pub(crate) fn inner_mut(&self) -> RefMut<'_, Inner> {
        self.0.borrow_mut()
    }

    /// Adds a contribution into the gradient buffer (allocated on first use).
    pub fn add_to_grad(&self, contribution: &[f64]) {
        let mut inner = self.0.borrow_mut();
        let n = inner.data.len();
        debug_assert_eq!(contribution.len(), n);
        let grad = inner.grad.get_or_insert_with(|| vec![0.0; n]);
        for (g, c) in grad.iter_mut().zip(contribution) {
            *g += c;
        }
    }

    /// True when both handles point at the same storage.
    pub fn same_storage(&self, other: &Tensor) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }
}

/// Checkpoint form: shape plus row-major values. Round-trips bit-exactly
/// through JSON (shortest round-trip decimals).
#[derive(Serialize, Deserialize)]
struct TensorRepr {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
}

impl Serialize for Tensor {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let inner = self.0.borrow();
        TensorRepr {
            shape: inner.shape.clone(),
            data: inner.data.clone(),
            requires_grad: inner.requires_grad,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Tensor, D::Error> {
        let repr = TensorRepr::deserialize(deserializer)?;
        let t = Tensor::new(repr.shape, repr.data).map_err(serde::de::Error::custom)?;
        t.0.borrow_mut().requires_grad = repr.requires_grad;
        Ok(t)
    }
}
