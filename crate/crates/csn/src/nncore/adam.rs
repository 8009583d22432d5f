//! ADAM optimizer state and update rule.

use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};

/// Optimizer state for a flat parameter vector.
///
/// The effective learning rate is `base_lr * decay^epoch`; the caller sets the
/// epoch via [`AdamState::set_epoch`] before stepping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub base_lr: f64,
    pub decay: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(dim: usize, base_lr: f64, decay: f64) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            base_lr,
            decay,
            lr: base_lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64, eps: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self.eps = eps;
        self
    }

    /// Apply the per-epoch decay schedule: `lr = base_lr * decay^epoch`.
    pub fn set_epoch(&mut self, epoch: usize) {
        self.lr = self.base_lr * self.decay.powi(epoch as i32);
    }
}

/// One bias-corrected ADAM step. Pure: returns the updated parameters and
/// state, leaving the inputs untouched.
pub fn adam_update(params: &[f64], grads: &[f64], state: &AdamState) -> Result<(Vec<f64>, AdamState)> {
    assert_eq!(params.len(), grads.len(), "params/grads length mismatch");
    assert_eq!(params.len(), state.m.len(), "params/state length mismatch");
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(CsnError::NonFiniteGradient { index });
    }

    let mut next = state.clone();
    next.t = state.t + 1;
    let bc1 = 1.0 - state.beta1.powi(next.t as i32);
    let bc2 = 1.0 - state.beta2.powi(next.t as i32);

    let mut out = params.to_vec();
    for i in 0..params.len() {
        let g = grads[i];
        next.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        next.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = next.m[i] / bc1;
        let v_hat = next.v[i] / bc2;
        out[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok((out, next))
}
