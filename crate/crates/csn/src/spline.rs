//! Per-feature basis expansions: the nonlinear first layer of the network.
//!
//! Column order of the expanded matrix is feature-major then basis-index:
//! feature `j` (0-based) owns columns `j*m .. (j+1)*m` (twice that for the
//! hinge kind, whose knots each emit the pair `(x-c)+`, `(c-x)+`). The
//! oblique kind replaces features by `q` trainable projections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};
use crate::nncore::{sigmoid, Matrix};

/// The interchangeable basis kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisKind {
    /// Sigmoid bases with trainable intercepts and slopes.
    SigmoidTrainable,
    /// Sigmoid bases with a large frozen slope, approximating indicators.
    SigmoidFixed { slope: f64 },
    /// Paired hinge bases `(x-c)+`, `(c-x)+` with trainable knots.
    Hinge,
    /// No expansion: the basis is the feature itself.
    Identity,
    /// Sigmoid bases on trainable linear projections of all features.
    ObliqueSigmoid { projections: usize },
}

impl BasisKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisKind::SigmoidFixed { slope } if !(slope > 0.0) => Err(CsnError::Config(format!(
                "fixed sigmoid slope must be positive, got {slope}"
            ))),
            BasisKind::ObliqueSigmoid { projections } if projections < 1 => Err(CsnError::Config(
                "oblique basis needs at least one projection".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Width of the expanded matrix for `m` bases over `p` features.
    pub fn output_width(&self, m: usize, p: usize) -> usize {
        match *self {
            BasisKind::SigmoidTrainable | BasisKind::SigmoidFixed { .. } => m * p,
            BasisKind::Hinge => 2 * m * p,
            BasisKind::Identity => p,
            BasisKind::ObliqueSigmoid { projections } => m * projections,
        }
    }

    /// True when the slope array is excluded from training.
    pub fn slopes_frozen(&self) -> bool {
        matches!(self, BasisKind::SigmoidFixed { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            BasisKind::SigmoidTrainable => "sigmoid_trainable",
            BasisKind::SigmoidFixed { .. } => "sigmoid_fixed",
            BasisKind::Hinge => "hinge",
            BasisKind::Identity => "identity",
            BasisKind::ObliqueSigmoid { .. } => "oblique_sigmoid",
        }
    }
}

/// Summary of one input column as seen by the spline layer, used to place
/// initial knots. `sorted` is an ascending sample of the column.
#[derive(Debug, Clone)]
pub struct ColumnStats {
    pub std: f64,
    pub sorted: Vec<f64>,
}

impl ColumnStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n.max(1.0);
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ColumnStats {
            std: var.sqrt(),
            sorted,
        }
    }

    /// Linear-interpolation quantile of the stored sample.
    pub fn quantile(&self, level: f64) -> f64 {
        let n = self.sorted.len();
        assert!(n > 0, "quantile of empty sample");
        let h = (n - 1) as f64 * level.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = h - lo as f64;
        self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo])
    }
}

/// Parameters of the basis layer.
///
/// `alpha`/`beta` are laid out basis-major within feature (index `j*m + i`).
/// For the hinge kind `alpha` holds the knots and `beta` is empty; for the
/// identity kind both are empty. The oblique kind adds a `q x p` projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineParams {
    pub kind: BasisKind,
    pub m: usize,
    pub p: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub projection: Option<Matrix>,
}

impl SplineParams {
    pub fn output_width(&self) -> usize {
        self.kind.output_width(self.m, self.p)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        let units = match self.kind {
            BasisKind::Identity => 0,
            BasisKind::ObliqueSigmoid { projections } => self.m * projections,
            _ => self.m * self.p,
        };
        if self.alpha.len() != units {
            return Err(CsnError::Config(format!(
                "spline alpha has {} entries, expected {units}",
                self.alpha.len()
            )));
        }
        let beta_units = match self.kind {
            BasisKind::Identity | BasisKind::Hinge => 0,
            _ => units,
        };
        if self.beta.len() != beta_units {
            return Err(CsnError::Config(format!(
                "spline beta has {} entries, expected {beta_units}",
                self.beta.len()
            )));
        }
        match (self.kind, &self.projection) {
            (BasisKind::ObliqueSigmoid { projections }, Some(w)) => {
                if w.shape() != (projections, self.p) {
                    return Err(CsnError::Config(format!(
                        "oblique projection is {}x{}, expected {projections}x{}",
                        w.rows(),
                        w.cols(),
                        self.p
                    )));
                }
            }
            (BasisKind::ObliqueSigmoid { .. }, None) => {
                return Err(CsnError::Config("oblique basis lacks projection matrix".into()))
            }
            (_, Some(_)) => {
                return Err(CsnError::Config(
                    "projection matrix only valid for the oblique kind".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Result of [`init_bases`]: the parameters plus any degenerate-column
/// warnings raised while placing knots.
#[derive(Debug, Clone)]
pub struct SplineInit {
    pub params: SplineParams,
    pub warnings: Vec<String>,
}

/// Place initial knots at the `m` equally spaced interior quantiles
/// (levels `i/(m+1)`) of each column and derive intercepts/slopes from them.
///
/// A column with zero interquantile range collapses all of its knots onto the
/// single centered location and raises a warning.
pub fn init_bases(
    column_stats: &[ColumnStats],
    m: usize,
    kind: BasisKind,
    seed: u64,
) -> Result<SplineInit> {
    kind.validate()?;
    if m < 1 {
        return Err(CsnError::Config("basis count m must be at least 1".into()));
    }
    let p = column_stats.len();
    if p == 0 {
        return Err(CsnError::Config("no feature columns".into()));
    }
    let mut warnings = Vec::new();

    let mut knots_for = |stats: &ColumnStats, feature: &mut dyn FnMut() -> String| -> Vec<f64> {
        let total = stats.sorted[stats.sorted.len() - 1] - stats.sorted[0];
        let low = stats.quantile(1.0 / (m as f64 + 1.0));
        let high = stats.quantile(m as f64 / (m as f64 + 1.0));
        let degenerate = total.abs() < 1e-12 || (m > 1 && (high - low).abs() < 1e-12);
        if degenerate {
            warnings.push(format!(
                "{} has zero interquantile range; using a single centered basis",
                feature()
            ));
            return vec![stats.quantile(0.5); m];
        }
        (1..=m)
            .map(|i| stats.quantile(i as f64 / (m as f64 + 1.0)))
            .collect()
    };

    let params = match kind {
        BasisKind::Identity => SplineParams {
            kind,
            m,
            p,
            alpha: Vec::new(),
            beta: Vec::new(),
            projection: None,
        },
        BasisKind::SigmoidTrainable | BasisKind::SigmoidFixed { .. } => {
            let mut alpha = Vec::with_capacity(m * p);
            let mut beta = Vec::with_capacity(m * p);
            for (j, stats) in column_stats.iter().enumerate() {
                let slope = match kind {
                    BasisKind::SigmoidFixed { slope } => slope,
                    _ => {
                        if stats.std > 1e-12 {
                            2.0 / stats.std
                        } else {
                            2.0
                        }
                    }
                };
                let knots = knots_for(stats, &mut || format!("feature {j}"));
                for knot in knots {
                    alpha.push(-slope * knot);
                    beta.push(slope);
                }
            }
            SplineParams {
                kind,
                m,
                p,
                alpha,
                beta,
                projection: None,
            }
        }
        BasisKind::Hinge => {
            let mut alpha = Vec::with_capacity(m * p);
            for (j, stats) in column_stats.iter().enumerate() {
                alpha.extend(knots_for(stats, &mut || format!("feature {j}")));
            }
            SplineParams {
                kind,
                m,
                p,
                alpha,
                beta: Vec::new(),
                projection: None,
            }
        }
        BasisKind::ObliqueSigmoid { projections } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = Matrix::zeros(projections, p);
            for r in 0..projections {
                let row = w.row_mut(r);
                loop {
                    for v in row.iter_mut() {
                        *v = rng.random_range(-1.0..1.0);
                    }
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1e-6 {
                        for v in row.iter_mut() {
                            *v /= norm;
                        }
                        break;
                    }
                }
            }
            // Projected standardized inputs are roughly unit-scale; spread the
            // knots over the bulk of that range at the interior levels.
            let mut alpha = Vec::with_capacity(m * projections);
            let mut beta = Vec::with_capacity(m * projections);
            for _ in 0..projections {
                for i in 1..=m {
                    let knot = -1.5 + 3.0 * i as f64 / (m as f64 + 1.0);
                    alpha.push(-2.0 * knot);
                    beta.push(2.0);
                }
            }
            SplineParams {
                kind,
                m,
                p,
                alpha,
                beta,
                projection: Some(w),
            }
        }
    };
    params.validate()?;
    Ok(SplineInit { params, warnings })
}

/// Forward pass plus the intermediates the backward pass needs.
#[derive(Debug, Clone)]
pub struct SplineCache {
    pub phi: Matrix,
    /// Projected inputs (`n x q`), oblique kind only.
    pub projected: Option<Matrix>,
}

/// Expand `x` (`n x p`) into the basis matrix.
pub fn spline_forward(x: &Matrix, params: &SplineParams) -> Result<Matrix> {
    spline_forward_cached(x, params).map(|c| c.phi)
}

pub fn spline_forward_cached(x: &Matrix, params: &SplineParams) -> Result<SplineCache> {
    if x.cols() != params.p {
        return Err(CsnError::Config(format!(
            "spline input has {} columns, parameters expect {}",
            x.cols(),
            params.p
        )));
    }
    if let Some((row, col)) = x.first_nonfinite() {
        return Err(CsnError::Data(format!(
            "non-finite input at row {row}, column {col}"
        )));
    }
    let n = x.rows();
    let m = params.m;
    match params.kind {
        BasisKind::Identity => Ok(SplineCache {
            phi: x.clone(),
            projected: None,
        }),
        BasisKind::SigmoidTrainable | BasisKind::SigmoidFixed { .. } => {
            let mut phi = Matrix::zeros(n, m * params.p);
            for r in 0..n {
                let x_row = x.row(r);
                let phi_row = phi.row_mut(r);
                for (j, &xv) in x_row.iter().enumerate() {
                    for i in 0..m {
                        let u = j * m + i;
                        phi_row[u] = sigmoid(params.alpha[u] + params.beta[u] * xv);
                    }
                }
            }
            Ok(SplineCache {
                phi,
                projected: None,
            })
        }
        BasisKind::Hinge => {
            let mut phi = Matrix::zeros(n, 2 * m * params.p);
            for r in 0..n {
                let x_row = x.row(r);
                let phi_row = phi.row_mut(r);
                for (j, &xv) in x_row.iter().enumerate() {
                    for i in 0..m {
                        let u = j * m + i;
                        let t = xv - params.alpha[u];
                        phi_row[2 * u] = t.max(0.0);
                        phi_row[2 * u + 1] = (-t).max(0.0);
                    }
                }
            }
            Ok(SplineCache {
                phi,
                projected: None,
            })
        }
        BasisKind::ObliqueSigmoid { projections } => {
            let w = params.projection.as_ref().expect("validated");
            let projected = x.matmul_bt(w);
            let mut phi = Matrix::zeros(n, m * projections);
            for r in 0..n {
                let proj_row = projected.row(r);
                let phi_row = phi.row_mut(r);
                for (j, &pv) in proj_row.iter().enumerate() {
                    for i in 0..m {
                        let u = j * m + i;
                        phi_row[u] = sigmoid(params.alpha[u] + params.beta[u] * pv);
                    }
                }
            }
            Ok(SplineCache {
                phi,
                projected: Some(projected),
            })
        }
    }
}

/// Gradients of a scalar loss with respect to the spline parameters, given
/// `grad_phi = dL/dPhi`. Layouts mirror [`SplineParams`]; frozen or absent
/// arrays come back empty/`None` as appropriate (the fixed-slope kind still
/// reports `beta` gradients, the caller decides whether to apply them).
#[derive(Debug, Clone)]
pub struct SplineGrads {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub projection: Option<Matrix>,
}

pub fn spline_backward(
    x: &Matrix,
    params: &SplineParams,
    cache: &SplineCache,
    grad_phi: &Matrix,
) -> SplineGrads {
    assert_eq!(grad_phi.shape(), cache.phi.shape(), "grad/phi shape mismatch");
    let n = x.rows();
    let m = params.m;
    match params.kind {
        BasisKind::Identity => SplineGrads {
            alpha: Vec::new(),
            beta: Vec::new(),
            projection: None,
        },
        BasisKind::SigmoidTrainable | BasisKind::SigmoidFixed { .. } => {
            let mut d_alpha = vec![0.0; params.alpha.len()];
            let mut d_beta = vec![0.0; params.beta.len()];
            for r in 0..n {
                let x_row = x.row(r);
                let phi_row = cache.phi.row(r);
                let g_row = grad_phi.row(r);
                for (j, &xv) in x_row.iter().enumerate() {
                    for i in 0..m {
                        let u = j * m + i;
                        let s = phi_row[u];
                        let core = g_row[u] * s * (1.0 - s);
                        d_alpha[u] += core;
                        d_beta[u] += core * xv;
                    }
                }
            }
            SplineGrads {
                alpha: d_alpha,
                beta: d_beta,
                projection: None,
            }
        }
        BasisKind::Hinge => {
            let mut d_alpha = vec![0.0; params.alpha.len()];
            for r in 0..n {
                let x_row = x.row(r);
                let g_row = grad_phi.row(r);
                for (j, &xv) in x_row.iter().enumerate() {
                    for i in 0..m {
                        let u = j * m + i;
                        let t = xv - params.alpha[u];
                        if t > 0.0 {
                            d_alpha[u] -= g_row[2 * u];
                        } else if t < 0.0 {
                            d_alpha[u] += g_row[2 * u + 1];
                        }
                    }
                }
            }
            SplineGrads {
                alpha: d_alpha,
                beta: Vec::new(),
                projection: None,
            }
        }
        BasisKind::ObliqueSigmoid { projections } => {
            let projected = cache.projected.as_ref().expect("cached");
            let mut d_alpha = vec![0.0; params.alpha.len()];
            let mut d_beta = vec![0.0; params.beta.len()];
            // dL/d(projected value), accumulated per row and projection.
            let mut d_proj_val = Matrix::zeros(n, projections);
            for r in 0..n {
                let proj_row = projected.row(r);
                let phi_row = cache.phi.row(r);
                let g_row = grad_phi.row(r);
                let dp_row = d_proj_val.row_mut(r);
                for (j, &pv) in proj_row.iter().enumerate() {
                    for i in 0..m {
                        let u = j * m + i;
                        let s = phi_row[u];
                        let core = g_row[u] * s * (1.0 - s);
                        d_alpha[u] += core;
                        d_beta[u] += core * pv;
                        dp_row[j] += core * params.beta[u];
                    }
                }
            }
            // projected = x * w^T, so dW = d_proj_val^T * x.
            let d_projection = d_proj_val.matmul_at(x);
            SplineGrads {
                alpha: d_alpha,
                beta: d_beta,
                projection: Some(d_projection),
            }
        }
    }
}
