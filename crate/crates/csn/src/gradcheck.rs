//! Finite-difference gradient checking against the analytic backward pass.
//!
//! The numerical side only ever calls the forward path (`scores` +
//! `loss_from_scores`), so it stays independent of the gradient code it
//! verifies.

use crate::error::Result;
use crate::model::{loss_from_scores, Loss, Model};
use crate::nncore::Matrix;

/// Central-difference gradient of the mean batch loss with respect to every
/// trainable parameter.
pub fn numerical_loss_gradient(
    model: &Model,
    x: &Matrix,
    y: &[f64],
    loss: Loss,
    step: f64,
) -> Result<Vec<f64>> {
    let base = model.pack_params();
    let mut probe = model.clone();
    let mut grad = vec![0.0; base.len()];
    let mut params = base.clone();
    for i in 0..base.len() {
        params[i] = base[i] + step;
        probe.unpack_params(&params)?;
        let up = loss_from_scores(loss, &probe.scores(x)?, y);
        params[i] = base[i] - step;
        probe.unpack_params(&params)?;
        let down = loss_from_scores(loss, &probe.scores(x)?, y);
        params[i] = base[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    Ok(grad)
}

/// Worst relative disagreement between two gradient vectors. Components
/// where both sides are below `floor` in magnitude compare as equal; the
/// denominator is floored at `floor` so near-zero gradients are judged on an
/// absolute scale.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Compare the model's analytic gradient against central finite differences;
/// returns the max relative error.
///
/// The denominator floor of 1e-4 judges near-dead parameters (e.g. saturated
/// fixed-slope bases) on an absolute scale: central differences at step `h`
/// carry cancellation noise of roughly `eps * |loss| / (2h)` (~1e-10 here),
/// which would otherwise dominate the ratio for gradients that are truly
/// zero.
pub fn check_loss_gradient(
    model: &Model,
    x: &Matrix,
    y: &[f64],
    loss: Loss,
    step: f64,
) -> Result<f64> {
    let analytic = model.gradients(x, y, loss)?;
    let numeric = numerical_loss_gradient(model, x, y, loss, step)?;
    Ok(max_relative_error(&analytic, &numeric, 1e-4))
}
