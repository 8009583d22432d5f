//! Full networks: spline basis -> linear projection -> stacked cross layers
//! -> scalar head, plus the dense baseline. Handles assembly, prediction,
//! exact backprop into a flat parameter vector, and persistence.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Standardizer, TrainingStats};
use crate::error::{CsnError, Result};
use crate::nncore::{
    affine, affine_backward, cross_layer_backward, cross_layer_forward, sigmoid, AffineParams,
    CrossParams, Matrix,
};
use crate::spline::{
    init_bases, spline_backward, spline_forward_cached, BasisKind, SplineCache, SplineParams,
};
use crate::util::mix_seed;

pub const MODEL_FORMAT: &str = "csn-model";
pub const MODEL_VERSION: u32 = 1;
/// Identifies the cross-layer recurrence baked into this format:
/// matrix weights applied elementwise with a residual term.
pub const CROSS_VARIANT: &str = "matrix-elementwise-residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Regression,
    Binary,
}

impl HeadKind {
    pub fn default_loss(&self) -> Loss {
        match self {
            HeadKind::Regression => Loss::Mse,
            HeadKind::Binary => Loss::LogLoss,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    LogLoss,
}

/// Mean batch loss computed from raw head scores (logits for log-loss).
pub fn loss_from_scores(loss: Loss, scores: &[f64], y: &[f64]) -> f64 {
    assert_eq!(scores.len(), y.len(), "scores/response length mismatch");
    let n = scores.len() as f64;
    match loss {
        Loss::Mse => {
            scores
                .iter()
                .zip(y)
                .map(|(s, t)| (s - t) * (s - t))
                .sum::<f64>()
                / n
        }
        Loss::LogLoss => {
            scores
                .iter()
                .zip(y)
                .map(|(&s, &t)| softplus(s) - t * s)
                .sum::<f64>()
                / n
        }
    }
}

#[inline]
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Architecture plus training hyperparameters of a cross spline net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsnConfig {
    pub basis: BasisKind,
    /// Bases per feature.
    pub m: usize,
    /// Projection width.
    pub d: usize,
    /// Number of cross layers.
    pub k: usize,
    pub head: HeadKind,
    pub lr: f64,
    pub batch_fraction: f64,
    pub decay: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl CsnConfig {
    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        if self.m < 1 {
            return Err(CsnError::Config("m must be at least 1".into()));
        }
        if self.d < 1 {
            return Err(CsnError::Config(format!("d must be at least 1, got {}", self.d)));
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(CsnError::Config(format!(
                "batch_fraction must lie in (0, 1], got {}",
                self.batch_fraction
            )));
        }
        if self.patience < 1 {
            return Err(CsnError::Config("patience must be at least 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(CsnError::Config("max_epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0) || !(self.decay > 0.0) {
            return Err(CsnError::Config(format!(
                "lr and decay must be positive, got lr={} decay={}",
                self.lr, self.decay
            )));
        }
        Ok(())
    }
}

/// The fixed off-the-shelf preset: trainable sigmoid bases, m=5, d=20, two
/// cross layers, ADAM at lr 0.02 on 1% batches with 0.995 decay per epoch and
/// early stopping.
pub fn treenet2_config(head: HeadKind, seed: u64) -> CsnConfig {
    CsnConfig {
        basis: BasisKind::SigmoidTrainable,
        m: 5,
        d: 20,
        k: 2,
        head,
        lr: 0.02,
        batch_fraction: 0.01,
        decay: 0.995,
        patience: 50,
        max_epochs: 500,
        seed,
    }
}

/// Dense baseline: relu hidden stack with a linear/sigmoid head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcnnConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub batch_fraction: f64,
    pub decay: f64,
    pub patience: usize,
    pub seed: u64,
}

impl FcnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(CsnError::Config("FCNN needs at least one hidden layer".into()));
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(CsnError::Config("hidden layer widths must be positive".into()));
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(CsnError::Config(format!(
                "batch_fraction must lie in (0, 1], got {}",
                self.batch_fraction
            )));
        }
        if self.patience < 1 {
            return Err(CsnError::Config("patience must be at least 1".into()));
        }
        Ok(())
    }
}

/// Layer stack of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Arch {
    Csn {
        config: CsnConfig,
        spline: SplineParams,
        projection: AffineParams,
        cross: Vec<CrossParams>,
        output: AffineParams,
    },
    Fcnn {
        config: FcnnConfig,
        /// Hidden layers (relu) followed by the scalar output layer.
        layers: Vec<AffineParams>,
    },
}

/// A fitted or freshly initialized network, immutable during prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub head: HeadKind,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub arch: Arch,
}

/// Assemble a cross spline net from training statistics.
pub fn build_csn(config: &CsnConfig, stats: &TrainingStats) -> Result<Model> {
    config.validate()?;
    let p = stats.p();
    if p == 0 {
        return Err(CsnError::Config("no features".into()));
    }
    let init = init_bases(&stats.columns, config.m, config.basis, mix_seed(config.seed, 1))?;
    for w in &init.warnings {
        eprintln!("warning: {w}");
    }
    let spline = init.params;
    let width = spline.output_width();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 2));
    let projection = AffineParams::glorot(config.d, width, &mut rng);
    let cross = (0..config.k)
        .map(|_| CrossParams::glorot(config.d, &mut rng))
        .collect();
    let output = AffineParams::glorot(1, config.d, &mut rng);
    let model = Model {
        head: config.head,
        feature_names: stats.feature_names.clone(),
        standardizer: stats.standardizer(),
        arch: Arch::Csn {
            config: config.clone(),
            spline,
            projection,
            cross,
            output,
        },
    };
    model.validate()?;
    Ok(model)
}

/// Assemble the relu baseline for `p` input features.
pub fn build_fcnn(config: &FcnnConfig, stats: &TrainingStats, head: HeadKind) -> Result<Model> {
    config.validate()?;
    let p = stats.p();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 3));
    let mut layers = Vec::with_capacity(config.hidden.len() + 1);
    let mut in_dim = p;
    for &w in &config.hidden {
        layers.push(AffineParams::glorot(w, in_dim, &mut rng));
        in_dim = w;
    }
    layers.push(AffineParams::glorot(1, in_dim, &mut rng));
    let model = Model {
        head,
        feature_names: stats.feature_names.clone(),
        standardizer: stats.standardizer(),
        arch: Arch::Fcnn {
            config: config.clone(),
            layers,
        },
    };
    model.validate()?;
    Ok(model)
}

struct CsnForward {
    spline: SplineCache,
    x0: Matrix,
    /// Cross outputs x_1..x_k.
    xs: Vec<Matrix>,
    /// Cross pre-products u_1..u_k.
    us: Vec<Matrix>,
    scores: Vec<f64>,
}

struct FcnnForward {
    /// Post-activation hidden outputs.
    hidden: Vec<Matrix>,
    scores: Vec<f64>,
}

impl Model {
    pub fn n_features(&self) -> usize {
        self.standardizer.means.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.n_features();
        if self.feature_names.len() != p || self.standardizer.stds.len() != p {
            return Err(CsnError::Config(format!(
                "feature bookkeeping disagrees: {} names, {} means, {} stds",
                self.feature_names.len(),
                p,
                self.standardizer.stds.len()
            )));
        }
        match &self.arch {
            Arch::Csn {
                config,
                spline,
                projection,
                cross,
                output,
            } => {
                config.validate()?;
                spline.validate()?;
                if spline.p != p {
                    return Err(CsnError::Config(format!(
                        "spline expects {} features, model has {p}",
                        spline.p
                    )));
                }
                projection.validate()?;
                if projection.in_dim() != spline.output_width() || projection.out_dim() != config.d
                {
                    return Err(CsnError::Config(format!(
                        "projection is {}x{}, expected {}x{}",
                        projection.out_dim(),
                        projection.in_dim(),
                        config.d,
                        spline.output_width()
                    )));
                }
                if cross.len() != config.k {
                    return Err(CsnError::Config(format!(
                        "{} cross layers for k={}",
                        cross.len(),
                        config.k
                    )));
                }
                for c in cross {
                    c.validate()?;
                    if c.dim() != config.d {
                        return Err(CsnError::Config(format!(
                            "cross layer dimension {} does not match d={}",
                            c.dim(),
                            config.d
                        )));
                    }
                }
                output.validate()?;
                if output.in_dim() != config.d || output.out_dim() != 1 {
                    return Err(CsnError::Config(format!(
                        "head is {}x{}, expected 1x{}",
                        output.out_dim(),
                        output.in_dim(),
                        config.d
                    )));
                }
            }
            Arch::Fcnn { config, layers } => {
                config.validate()?;
                if layers.len() != config.hidden.len() + 1 {
                    return Err(CsnError::Config(format!(
                        "{} layers for {} hidden widths",
                        layers.len(),
                        config.hidden.len()
                    )));
                }
                let mut in_dim = p;
                for (i, layer) in layers.iter().enumerate() {
                    layer.validate()?;
                    let want_out = config.hidden.get(i).copied().unwrap_or(1);
                    if layer.in_dim() != in_dim || layer.out_dim() != want_out {
                        return Err(CsnError::Config(format!(
                            "layer {i} is {}x{}, expected {want_out}x{in_dim}",
                            layer.out_dim(),
                            layer.in_dim()
                        )));
                    }
                    in_dim = want_out;
                }
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features() {
            return Err(CsnError::Config(format!(
                "input has {} columns, model expects {}",
                x.cols(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Raw head scores (the logit for binary heads) on raw inputs.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.scores_std(&self.standardizer.apply(x))
    }

    /// Predictions on raw inputs: scores for regression heads, probabilities
    /// in (0,1) for binary heads.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let scores = self.scores(x)?;
        Ok(match self.head {
            HeadKind::Regression => scores,
            HeadKind::Binary => scores.into_iter().map(sigmoid).collect(),
        })
    }

    pub(crate) fn scores_std(&self, z: &Matrix) -> Result<Vec<f64>> {
        match &self.arch {
            Arch::Csn { .. } => Ok(self.csn_forward(z)?.scores),
            Arch::Fcnn { .. } => Ok(self.fcnn_forward(z)?.scores),
        }
    }

    fn csn_forward(&self, z: &Matrix) -> Result<CsnForward> {
        let Arch::Csn {
            spline,
            projection,
            cross,
            output,
            ..
        } = &self.arch
        else {
            unreachable!()
        };
        let cache = spline_forward_cached(z, spline)?;
        let x0 = affine(&cache.phi, projection)?;
        let mut xs = Vec::with_capacity(cross.len());
        let mut us = Vec::with_capacity(cross.len());
        let mut xl = x0.clone();
        for c in cross {
            let (next, u) = cross_layer_forward(&x0, &xl, c)?;
            us.push(u);
            xs.push(next.clone());
            xl = next;
        }
        let scores = affine(&xl, output)?.values().to_vec();
        Ok(CsnForward {
            spline: cache,
            x0,
            xs,
            us,
            scores,
        })
    }

    fn fcnn_forward(&self, z: &Matrix) -> Result<FcnnForward> {
        let Arch::Fcnn { layers, .. } = &self.arch else {
            unreachable!()
        };
        let mut hidden = Vec::with_capacity(layers.len() - 1);
        let mut h = z.clone();
        for layer in &layers[..layers.len() - 1] {
            let a = affine(&h, layer)?;
            h = a.map(|v| v.max(0.0));
            hidden.push(h.clone());
        }
        let scores = affine(&h, layers.last().expect("validated"), )?.values().to_vec();
        Ok(FcnnForward { hidden, scores })
    }

    /// Flat gradient of the mean batch loss over every trainable parameter,
    /// aligned with [`Model::pack_params`]. Frozen slopes are excluded.
    pub fn gradients(&self, x: &Matrix, y: &[f64], loss: Loss) -> Result<Vec<f64>> {
        self.loss_and_gradients(x, y, loss).map(|(_, g)| g)
    }

    pub fn loss_and_gradients(&self, x: &Matrix, y: &[f64], loss: Loss) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        self.loss_and_gradients_std(&self.standardizer.apply(x), y, loss)
    }

    pub(crate) fn loss_and_gradients_std(
        &self,
        z: &Matrix,
        y: &[f64],
        loss: Loss,
    ) -> Result<(f64, Vec<f64>)> {
        if y.is_empty() {
            return Err(CsnError::Data("empty batch".into()));
        }
        if y.len() != z.rows() {
            return Err(CsnError::Data(format!(
                "batch has {} rows but {} responses",
                z.rows(),
                y.len()
            )));
        }
        match &self.arch {
            Arch::Csn { .. } => self.csn_loss_and_gradients(z, y, loss),
            Arch::Fcnn { .. } => self.fcnn_loss_and_gradients(z, y, loss),
        }
    }

    fn score_gradient(&self, loss: Loss, scores: &[f64], y: &[f64]) -> Result<(f64, Matrix)> {
        let value = loss_from_scores(loss, scores, y);
        if !value.is_finite() {
            return Err(CsnError::Data(format!(
                "non-finite {loss:?} loss over a batch of {} rows",
                y.len()
            )));
        }
        let n = y.len() as f64;
        let grad: Vec<f64> = match loss {
            Loss::Mse => scores
                .iter()
                .zip(y)
                .map(|(s, t)| 2.0 * (s - t) / n)
                .collect(),
            Loss::LogLoss => scores
                .iter()
                .zip(y)
                .map(|(&s, &t)| (sigmoid(s) - t) / n)
                .collect(),
        };
        Ok((value, Matrix::column(grad)))
    }

    fn csn_loss_and_gradients(&self, z: &Matrix, y: &[f64], loss: Loss) -> Result<(f64, Vec<f64>)> {
        let Arch::Csn {
            spline,
            projection,
            cross,
            output,
            ..
        } = &self.arch
        else {
            unreachable!()
        };
        let fwd = self.csn_forward(z)?;
        let (value, d_scores) = self.score_gradient(loss, &fwd.scores, y)?;

        let x_last = fwd.xs.last().unwrap_or(&fwd.x0);
        let (mut g, out_grads) = affine_backward(x_last, output, &d_scores);

        let mut cross_grads = Vec::with_capacity(cross.len());
        let mut dx0_acc = Matrix::zeros(g.rows(), g.cols());
        for l in (0..cross.len()).rev() {
            let xl = if l == 0 { &fwd.x0 } else { &fwd.xs[l - 1] };
            let (dx0, dxl, grads) = cross_layer_backward(&fwd.x0, xl, &fwd.us[l], &cross[l], &g);
            dx0_acc.add_assign(&dx0);
            g = dxl;
            cross_grads.push(grads);
        }
        cross_grads.reverse();
        g.add_assign(&dx0_acc);

        let (d_phi, proj_grads) = affine_backward(&fwd.spline.phi, projection, &g);
        let spline_grads = spline_backward(z, spline, &fwd.spline, &d_phi);

        let mut flat = Vec::with_capacity(self.num_params());
        flat.extend_from_slice(&spline_grads.alpha);
        if !spline.kind.slopes_frozen() {
            flat.extend_from_slice(&spline_grads.beta);
        }
        if let Some(dw) = &spline_grads.projection {
            flat.extend_from_slice(dw.values());
        }
        flat.extend_from_slice(proj_grads.weight.values());
        flat.extend_from_slice(&proj_grads.bias);
        for grads in &cross_grads {
            flat.extend_from_slice(grads.weight.values());
            flat.extend_from_slice(&grads.bias);
        }
        flat.extend_from_slice(out_grads.weight.values());
        flat.extend_from_slice(&out_grads.bias);
        debug_assert_eq!(flat.len(), self.num_params());
        Ok((value, flat))
    }

    fn fcnn_loss_and_gradients(&self, z: &Matrix, y: &[f64], loss: Loss) -> Result<(f64, Vec<f64>)> {
        let Arch::Fcnn { layers, .. } = &self.arch else {
            unreachable!()
        };
        let fwd = self.fcnn_forward(z)?;
        let (value, d_scores) = self.score_gradient(loss, &fwd.scores, y)?;

        let last_in = fwd.hidden.last().unwrap_or(z);
        let (mut g, last_grads) = affine_backward(last_in, layers.last().expect("validated"), &d_scores);
        let mut grads_rev = vec![last_grads];
        for l in (0..layers.len() - 1).rev() {
            let mask = fwd.hidden[l].map(|v| if v > 0.0 { 1.0 } else { 0.0 });
            let g_pre = g.hadamard(&mask);
            let input = if l == 0 { z } else { &fwd.hidden[l - 1] };
            let (g_prev, grads) = affine_backward(input, &layers[l], &g_pre);
            g = g_prev;
            grads_rev.push(grads);
        }

        let mut flat = Vec::with_capacity(self.num_params());
        for grads in grads_rev.iter().rev() {
            flat.extend_from_slice(grads.weight.values());
            flat.extend_from_slice(&grads.bias);
        }
        debug_assert_eq!(flat.len(), self.num_params());
        Ok((value, flat))
    }

    /// Number of trainable parameters (frozen slopes excluded).
    pub fn num_params(&self) -> usize {
        match &self.arch {
            Arch::Csn {
                spline,
                projection,
                cross,
                output,
                ..
            } => {
                let mut n = spline.alpha.len();
                if !spline.kind.slopes_frozen() {
                    n += spline.beta.len();
                }
                if let Some(w) = &spline.projection {
                    n += w.values().len();
                }
                n += projection.weight.values().len() + projection.bias.len();
                for c in cross {
                    n += c.weight.values().len() + c.bias.len();
                }
                n + output.weight.values().len() + output.bias.len()
            }
            Arch::Fcnn { layers, .. } => layers
                .iter()
                .map(|l| l.weight.values().len() + l.bias.len())
                .sum(),
        }
    }

    /// Pack every trainable parameter into one flat vector. The inverse is
    /// [`Model::unpack_params`]; the two are an exact bijection.
    pub fn pack_params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_params());
        match &self.arch {
            Arch::Csn {
                spline,
                projection,
                cross,
                output,
                ..
            } => {
                flat.extend_from_slice(&spline.alpha);
                if !spline.kind.slopes_frozen() {
                    flat.extend_from_slice(&spline.beta);
                }
                if let Some(w) = &spline.projection {
                    flat.extend_from_slice(w.values());
                }
                flat.extend_from_slice(projection.weight.values());
                flat.extend_from_slice(&projection.bias);
                for c in cross {
                    flat.extend_from_slice(c.weight.values());
                    flat.extend_from_slice(&c.bias);
                }
                flat.extend_from_slice(output.weight.values());
                flat.extend_from_slice(&output.bias);
            }
            Arch::Fcnn { layers, .. } => {
                for l in layers {
                    flat.extend_from_slice(l.weight.values());
                    flat.extend_from_slice(&l.bias);
                }
            }
        }
        debug_assert_eq!(flat.len(), self.num_params());
        flat
    }

    /// Write a flat parameter vector back into the structured layers.
    pub fn unpack_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(CsnError::Config(format!(
                "parameter vector has {} entries, model expects {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut pos = 0usize;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[pos..pos + dst.len()]);
            pos += dst.len();
        };
        match &mut self.arch {
            Arch::Csn {
                spline,
                projection,
                cross,
                output,
                ..
            } => {
                take(&mut spline.alpha);
                if !spline.kind.slopes_frozen() {
                    take(&mut spline.beta);
                }
                if let Some(w) = &mut spline.projection {
                    take(w.values_mut());
                }
                take(projection.weight.values_mut());
                take(&mut projection.bias);
                for c in cross {
                    take(c.weight.values_mut());
                    take(&mut c.bias);
                }
                take(output.weight.values_mut());
                take(&mut output.bias);
            }
            Arch::Fcnn { layers, .. } => {
                for l in layers {
                    take(l.weight.values_mut());
                    take(&mut l.bias);
                }
            }
        }
        debug_assert_eq!(pos, flat.len());
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    cross_variant: String,
    model: Model,
}

/// Persist a model as a self-describing versioned file.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        cross_variant: CROSS_VARIANT.to_string(),
        model: model.clone(),
    };
    let json = serde_json::to_string_pretty(&file)?;
    fs::write(path, json)?;
    Ok(())
}

/// Load a model saved by [`save_model`], checking format and version.
pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path)?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CsnError::ModelFormat(format!("unreadable model file: {e}")))?;
    if raw.get("format").and_then(|v| v.as_str()) != Some(MODEL_FORMAT) {
        return Err(CsnError::ModelFormat("not a model file".into()));
    }
    let version = raw
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .unwrap_or(0) as u32;
    if version != MODEL_VERSION {
        return Err(CsnError::UnsupportedVersion {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(raw)
        .map_err(|e| CsnError::ModelFormat(format!("malformed model file: {e}")))?;
    file.model.validate()?;
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TrainingStats;

    fn stats_for(p: usize, n: usize) -> TrainingStats {
        let mut values = Vec::with_capacity(n * p);
        for r in 0..n {
            for c in 0..p {
                let t = ((r * p + c) as f64 * 0.7368).sin();
                values.push(t);
            }
        }
        let x = Matrix::from_vec(n, p, values).unwrap();
        let names = (0..p).map(|j| format!("x{}", j + 1)).collect();
        TrainingStats::from_matrix(&x, names)
    }

    fn small_config(basis: BasisKind, head: HeadKind) -> CsnConfig {
        CsnConfig {
            basis,
            m: 2,
            d: 3,
            k: 1,
            head,
            lr: 0.02,
            batch_fraction: 0.5,
            decay: 0.995,
            patience: 5,
            max_epochs: 10,
            seed: 11,
        }
    }

    #[test]
    fn parameter_count_matches_shape_chain() {
        let stats = stats_for(30, 200);
        let cfg = CsnConfig {
            basis: BasisKind::SigmoidTrainable,
            m: 5,
            d: 20,
            k: 2,
            head: HeadKind::Regression,
            lr: 0.02,
            batch_fraction: 0.01,
            decay: 0.995,
            patience: 50,
            max_epochs: 500,
            seed: 1,
        };
        let model = build_csn(&cfg, &stats).unwrap();
        // 2*150 + (150*20 + 20) + 2*(400 + 20) + (20 + 1)
        assert_eq!(model.num_params(), 4181);
    }

    #[test]
    fn fcnn_parameter_count() {
        let stats = stats_for(30, 50);
        let cfg = FcnnConfig {
            hidden: vec![20, 10, 5],
            lr: 0.01,
            batch_fraction: 0.02,
            decay: 0.995,
            patience: 50,
            seed: 4,
        };
        let model = build_fcnn(&cfg, &stats, HeadKind::Regression).unwrap();
        // (30*20 + 20) + (20*10 + 10) + (10*5 + 5) + (5*1 + 1)
        assert_eq!(model.num_params(), 891);
    }

    #[test]
    fn invalid_config_rejected() {
        let stats = stats_for(3, 20);
        let mut cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Regression);
        cfg.d = 0;
        assert!(build_csn(&cfg, &stats).is_err());
        let mut cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Regression);
        cfg.batch_fraction = 0.0;
        assert!(build_csn(&cfg, &stats).is_err());
    }

    #[test]
    fn zero_weights_predict_head_bias() {
        let stats = stats_for(4, 30);
        let cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Regression);
        let mut model = build_csn(&cfg, &stats).unwrap();
        let zeros = vec![0.0; model.num_params()];
        model.unpack_params(&zeros).unwrap();
        let x = Matrix::zeros(5, 4);
        let pred = model.predict(&x).unwrap();
        assert!(pred.iter().all(|&v| v == 0.0));

        // Binary head: sigma(bias) = 0.5 at zero.
        let cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Binary);
        let mut model = build_csn(&cfg, &stats).unwrap();
        let zeros = vec![0.0; model.num_params()];
        model.unpack_params(&zeros).unwrap();
        let pred = model.predict(&x).unwrap();
        assert!(pred.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn single_row_and_batch_agree() {
        let stats = stats_for(4, 60);
        let cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Regression);
        let model = build_csn(&cfg, &stats).unwrap();
        let x = Matrix::from_rows(&[
            vec![0.3, -0.2, 0.9, 0.1],
            vec![-0.5, 0.7, 0.0, -0.9],
            vec![0.11, 0.22, 0.33, 0.44],
        ])
        .unwrap();
        let batched = model.predict(&x).unwrap();
        for r in 0..3 {
            let single = model
                .predict(&Matrix::from_rows(&[x.row(r).to_vec()]).unwrap())
                .unwrap();
            assert!((single[0] - batched[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_assembled_single_basis_model_matches_closed_form() {
        // 1 feature, m=1, d=1, k=0: f(x) = w2 * sigma(alpha + beta z) + b2.
        let stats_x = Matrix::from_vec(50, 1, (0..50).map(|i| i as f64 / 10.0).collect()).unwrap();
        let stats = TrainingStats::from_matrix(&stats_x, vec!["x1".into()]);
        let cfg = CsnConfig {
            basis: BasisKind::SigmoidTrainable,
            m: 1,
            d: 1,
            k: 0,
            head: HeadKind::Regression,
            lr: 0.02,
            batch_fraction: 1.0,
            decay: 1.0,
            patience: 1,
            max_epochs: 1,
            seed: 3,
        };
        let mut model = build_csn(&cfg, &stats).unwrap();
        // alpha, beta, w1 (1x1), b1, w2 (1x1), b2
        let params = vec![0.4, 1.7, 1.0, 0.0, 2.5, -0.3];
        model.unpack_params(&params).unwrap();
        let std = model.standardizer.clone();
        for &xv in &[0.0, 0.7, 1.9, 3.3, 4.9] {
            let z = (xv - std.means[0]) / std.stds[0];
            let want = 2.5 * sigmoid(0.4 + 1.7 * z) - 0.3;
            let got = model
                .predict(&Matrix::from_rows(&[vec![xv]]).unwrap())
                .unwrap()[0];
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn zero_residual_mse_batch_has_zero_gradient() {
        let stats = stats_for(3, 40);
        let cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Regression);
        let model = build_csn(&cfg, &stats).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, -0.4, 0.6], vec![0.9, 0.2, -0.8]]).unwrap();
        let y = model.predict(&x).unwrap();
        let g = model.gradients(&x, &y, Loss::Mse).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn logloss_head_bias_gradient_is_mean_residual() {
        let stats = stats_for(3, 40);
        let cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Binary);
        let model = build_csn(&cfg, &stats).unwrap();
        let x = Matrix::from_rows(&[
            vec![0.1, -0.4, 0.6],
            vec![0.9, 0.2, -0.8],
            vec![-0.3, 0.5, 0.2],
        ])
        .unwrap();
        let y = vec![1.0, 0.0, 1.0];
        let probs = model.predict(&x).unwrap();
        let g = model.gradients(&x, &y, Loss::LogLoss).unwrap();
        let want: f64 = probs.iter().zip(&y).map(|(p, t)| p - t).sum::<f64>() / y.len() as f64;
        let head_bias_grad = *g.last().unwrap();
        assert!((head_bias_grad - want).abs() < 1e-12);
    }

    #[test]
    fn pack_unpack_round_trip() {
        for basis in [
            BasisKind::SigmoidTrainable,
            BasisKind::SigmoidFixed { slope: 20.0 },
            BasisKind::Hinge,
            BasisKind::Identity,
            BasisKind::ObliqueSigmoid { projections: 2 },
        ] {
            let stats = stats_for(3, 40);
            let cfg = small_config(basis, HeadKind::Regression);
            let mut model = build_csn(&cfg, &stats).unwrap();
            let flat = model.pack_params();
            let tweaked: Vec<f64> = flat.iter().map(|v| v + 0.125).collect();
            model.unpack_params(&tweaked).unwrap();
            assert_eq!(model.pack_params(), tweaked, "{basis:?}");
        }
    }

    #[test]
    fn frozen_slopes_survive_unpack() {
        let stats = stats_for(3, 40);
        let cfg = small_config(BasisKind::SigmoidFixed { slope: 20.0 }, HeadKind::Regression);
        let mut model = build_csn(&cfg, &stats).unwrap();
        let before = match &model.arch {
            Arch::Csn { spline, .. } => spline.beta.clone(),
            _ => unreachable!(),
        };
        let flat = model.pack_params();
        let tweaked: Vec<f64> = flat.iter().map(|v| v * 3.0 + 1.0).collect();
        model.unpack_params(&tweaked).unwrap();
        let after = match &model.arch {
            Arch::Csn { spline, .. } => spline.beta.clone(),
            _ => unreachable!(),
        };
        assert_eq!(before, after);
        assert!(before.iter().all(|&b| b == 20.0));
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let stats = stats_for(5, 80);
        let cfg = small_config(BasisKind::SigmoidTrainable, HeadKind::Regression);
        let model = build_csn(&cfg, &stats).unwrap();
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);

        let mut x = Matrix::zeros(100, 5);
        for (i, v) in x.values_mut().iter_mut().enumerate() {
            *v = ((i * 2654435761) % 1000) as f64 / 500.0 - 1.0;
        }
        assert_eq!(model.predict(&x).unwrap(), loaded.predict(&x).unwrap());
    }

    #[test]
    fn unknown_version_is_an_explicit_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let stats = stats_for(2, 30);
        let cfg = small_config(BasisKind::Identity, HeadKind::Regression);
        let model = build_csn(&cfg, &stats).unwrap();
        save_model(&model, &path).unwrap();
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 99");
        fs::write(&path, text).unwrap();
        match load_model(&path) {
            Err(CsnError::UnsupportedVersion { found: 99, .. }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let stats = stats_for(2, 30);
        let cfg = small_config(BasisKind::Identity, HeadKind::Regression);
        let model = build_csn(&cfg, &stats).unwrap();
        save_model(&model, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_model(&path), Err(CsnError::ModelFormat(_))));
    }

    #[test]
    fn treenet2_preset_values() {
        let cfg = treenet2_config(HeadKind::Regression, 7);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.m, 5);
        assert_eq!(cfg.d, 20);
        assert_eq!(cfg.lr, 0.02);
        assert_eq!(cfg.batch_fraction, 0.01);
        assert_eq!(cfg.decay, 0.995);
        assert_eq!(cfg.patience, 50);
        assert_eq!(cfg.basis, BasisKind::SigmoidTrainable);
    }
}
