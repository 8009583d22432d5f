//! Affine and cross layers with exact analytic forward/backward rules.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};
use crate::nncore::Matrix;

/// Weights of a dense affine map `y = W x + b`, `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl AffineParams {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        AffineParams {
            weight: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    /// Uniform init on +-sqrt(6 / (fan_in + fan_out)); biases zero.
    pub fn glorot(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut weight = Matrix::zeros(out_dim, in_dim);
        for v in weight.values_mut() {
            *v = rng.random_range(-bound..bound);
        }
        AffineParams {
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bias.len() != self.weight.rows() {
            return Err(CsnError::Config(format!(
                "affine bias length {} does not match weight rows {}",
                self.bias.len(),
                self.weight.rows()
            )));
        }
        Ok(())
    }
}

/// Per-layer weights of the cross recurrence; `weight` is square `d x d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl CrossParams {
    pub fn zeros(d: usize) -> Self {
        CrossParams {
            weight: Matrix::zeros(d, d),
            bias: vec![0.0; d],
        }
    }

    pub fn glorot(d: usize, rng: &mut ChaCha8Rng) -> Self {
        let affine = AffineParams::glorot(d, d, rng);
        CrossParams {
            weight: affine.weight,
            bias: affine.bias,
        }
    }

    pub fn dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weight.rows() != self.weight.cols() {
            return Err(CsnError::Config(format!(
                "cross weight must be square, got {}x{}",
                self.weight.rows(),
                self.weight.cols()
            )));
        }
        if self.bias.len() != self.weight.rows() {
            return Err(CsnError::Config(format!(
                "cross bias length {} does not match dimension {}",
                self.bias.len(),
                self.weight.rows()
            )));
        }
        Ok(())
    }
}

/// Row-wise affine map: row i of the output is `W x_i + b`.
pub fn affine(x: &Matrix, p: &AffineParams) -> Result<Matrix> {
    if x.cols() != p.in_dim() {
        return Err(CsnError::Config(format!(
            "affine input has {} columns but weight is {}x{}",
            x.cols(),
            p.out_dim(),
            p.in_dim()
        )));
    }
    let mut out = x.matmul_bt(&p.weight);
    out.add_row_broadcast(&p.bias);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AffineGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients of a scalar loss through [`affine`]: returns `dL/dx` and the
/// parameter gradients, given `grad_out = dL/dy`.
pub fn affine_backward(x: &Matrix, p: &AffineParams, grad_out: &Matrix) -> (Matrix, AffineGrads) {
    let dx = grad_out.matmul(&p.weight);
    let dw = grad_out.matmul_at(x);
    let db = grad_out.col_sums();
    (dx, AffineGrads { weight: dw, bias: db })
}

/// One cross layer: `x_{l+1} = x0 .* (W x_l + b) + x_l`, applied row-wise.
pub fn cross_layer(x0: &Matrix, xl: &Matrix, p: &CrossParams) -> Result<Matrix> {
    cross_layer_forward(x0, xl, p).map(|(out, _)| out)
}

/// As [`cross_layer`] but also returns the pre-product term `u = W x_l + b`
/// needed by the backward pass.
pub fn cross_layer_forward(x0: &Matrix, xl: &Matrix, p: &CrossParams) -> Result<(Matrix, Matrix)> {
    if x0.shape() != xl.shape() {
        return Err(CsnError::Config(format!(
            "cross layer inputs differ: x0 is {}x{}, xl is {}x{}",
            x0.rows(),
            x0.cols(),
            xl.rows(),
            xl.cols()
        )));
    }
    if x0.cols() != p.dim() {
        return Err(CsnError::Config(format!(
            "cross layer input width {} does not match weight {}x{}",
            x0.cols(),
            p.weight.rows(),
            p.weight.cols()
        )));
    }
    let mut u = xl.matmul_bt(&p.weight);
    u.add_row_broadcast(&p.bias);
    let out = x0.hadamard(&u).add(xl);
    Ok((out, u))
}

#[derive(Debug, Clone)]
pub struct CrossGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients through one cross layer. Returns `(dL/dx0, dL/dxl, grads)` where
/// the `dL/dx0` part covers only this layer's explicit `x0` factor; the caller
/// accumulates it across the stack.
pub fn cross_layer_backward(
    x0: &Matrix,
    xl: &Matrix,
    u: &Matrix,
    p: &CrossParams,
    grad_out: &Matrix,
) -> (Matrix, Matrix, CrossGrads) {
    let du = grad_out.hadamard(x0);
    let dx0 = grad_out.hadamard(u);
    let mut dxl = du.matmul(&p.weight);
    dxl.add_assign(grad_out);
    let dw = du.matmul_at(xl);
    let db = du.col_sums();
    (dx0, dxl, CrossGrads { weight: dw, bias: db })
}

/// Elementwise activation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    Identity,
}

/// Numerically stable logistic function, clamped into the open unit interval
/// so saturated outputs stay strictly between 0 and 1.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Elementwise activation.
pub fn activation(kind: Activation, z: &Matrix) -> Matrix {
    match kind {
        Activation::Sigmoid => z.map(sigmoid),
        Activation::Relu => z.map(|v| v.max(0.0)),
        Activation::Identity => z.clone(),
    }
}

/// Gradient through [`activation`], expressed in terms of the forward output.
pub fn activation_backward(kind: Activation, output: &Matrix, grad_out: &Matrix) -> Matrix {
    match kind {
        Activation::Sigmoid => {
            let deriv = output.map(|s| s * (1.0 - s));
            grad_out.hadamard(&deriv)
        }
        Activation::Relu => {
            let mask = output.map(|s| if s > 0.0 { 1.0 } else { 0.0 });
            grad_out.hadamard(&mask)
        }
        Activation::Identity => grad_out.clone(),
    }
}
