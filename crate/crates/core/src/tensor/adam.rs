//! Adam optimizer over a fixed parameter list.

use super::{finite_checks_enabled, Tensor};
use crate::error::{Error, Result};

/// Per-parameter moment buffers plus hyperparameters. Buffers are aligned
/// with the parameter list passed to [`AdamState::new`]; every
/// [`AdamState::step`] must receive the same list.
pub struct AdamState {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Defaults: lr 1e-3, beta1 0.9, beta2 0.999, epsilon 1e-8.
    pub fn new(params: &[Tensor]) -> AdamState {
        Self::with_hyper(params, 1e-3, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(params: &[Tensor], lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> AdamState {
        AdamState {
            lr,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update; gradients are zeroed afterwards.
    pub fn step(&mut self, params: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::Precondition(format!(
                "adam_step: state tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            let inner = p.inner();
            match &inner.grad {
                None => {
                    return Err(Error::Precondition(format!(
                        "adam_step: parameter {i} has no gradient"
                    )))
                }
                Some(g) if g.len() != self.m[i].len() => {
                    return Err(Error::Precondition(format!(
                        "adam_step: parameter {i} gradient length {} does not match moment buffer {}",
                        g.len(),
                        self.m[i].len()
                    )))
                }
                Some(_) => {}
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (i, p) in params.iter().enumerate() {
            let mut inner = p.inner_mut();
            let grad = inner.grad.take().expect("checked above");
            for (j, &g) in grad.iter().enumerate() {
                let m = &mut self.m[i][j];
                let v = &mut self.v[i][j];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                inner.data[j] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
            if finite_checks_enabled() {
                if let Some(bad) = inner.data.iter().find(|v| !v.is_finite()) {
                    return Err(Error::NumericDomain(format!(
                        "adam_step produced non-finite parameter value {bad}"
                    )));
                }
            }
            inner.grad = Some(vec![0.0; grad.len()]);
        }
        Ok(())
    }
}

/// Resets the gradients of every tensor in the list to zeros.
pub fn zero_grads(params: &[Tensor]) {
    for p in params {
        p.zero_grad();
    }
}
