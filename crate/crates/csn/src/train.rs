//! The fitting loop (mini-batch ADAM with per-epoch decay and early
//! stopping), evaluation metrics, and random hyperparameter search.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ResponseKind, Split};
use crate::error::{CsnError, Result};
use crate::model::{loss_from_scores, Loss, Model};
use crate::nncore::{adam_update, AdamState};
use crate::util::mix_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub lr: f64,
    pub batch_fraction: f64,
    pub decay: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience < 1 || self.max_epochs < 1 {
            return Err(CsnError::Config(format!(
                "patience ({}) and max_epochs ({}) must be at least 1",
                self.patience, self.max_epochs
            )));
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(CsnError::Config(format!(
                "batch_fraction must lie in (0, 1], got {}",
                self.batch_fraction
            )));
        }
        Ok(())
    }
}

impl crate::model::CsnConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.head.default_loss(),
            lr: self.lr,
            batch_fraction: self.batch_fraction,
            decay: self.decay,
            patience: self.patience,
            max_epochs: self.max_epochs,
            seed: self.seed,
        }
    }
}

impl crate::model::FcnnConfig {
    pub fn train_config(&self, loss: Loss, max_epochs: usize) -> TrainConfig {
        TrainConfig {
            loss,
            lr: self.lr,
            batch_fraction: self.batch_fraction,
            decay: self.decay,
            patience: self.patience,
            max_epochs,
            seed: self.seed,
        }
    }
}

/// Loss trajectory of one fit. Epochs are 0-based; `train_loss[e]` is the
/// average of that epoch's mini-batch losses and `val_loss[e]` the loss on
/// the validation split after the epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    /// True when the returned parameters come from an earlier epoch than the
    /// last one trained.
    pub restored_best: bool,
}

impl FitHistory {
    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }
}

/// Mini-batch ADAM with a fresh seeded shuffle each epoch, effective learning
/// rate `lr * decay^epoch`, and early stopping on the validation loss
/// (strict improvement, no minimum delta). Returns the model restored to its
/// best-validation epoch.
pub fn fit(model: Model, data: &Dataset, cfg: &TrainConfig) -> Result<(Model, FitHistory)> {
    cfg.validate()?;
    let train_rows = data.rows_for(Split::Train);
    let val_rows = data.rows_for(Split::Val);
    if train_rows.is_empty() || val_rows.is_empty() {
        return Err(CsnError::Config(format!(
            "fit needs non-empty train and validation splits, got {} train / {} val rows",
            train_rows.len(),
            val_rows.len()
        )));
    }

    let (x_train_raw, y_train) = data.subset(&train_rows);
    let (x_val_raw, y_val) = data.subset(&val_rows);
    let z_train = model.standardizer.apply(&x_train_raw);
    let z_val = model.standardizer.apply(&x_val_raw);

    let n = train_rows.len();
    let batch_size = ((cfg.batch_fraction * n as f64).ceil() as usize).clamp(1, n);

    let mut model = model;
    let mut params = model.pack_params();
    let mut adam = AdamState::new(params.len(), cfg.lr, cfg.decay);

    let mut history = FitHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_epoch: 0,
        restored_best: false,
    };
    let mut best_loss = f64::INFINITY;
    let mut best_params = params.clone();
    let mut epochs_since_improve = 0usize;

    let abort = |reason: String, epoch: usize, history: FitHistory| CsnError::FitAborted {
        reason,
        epoch,
        history: Box::new(history),
    };

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.max_epochs {
        adam.set_epoch(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x0e70c4 + epoch as u64));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for (batch_idx, chunk) in order.chunks(batch_size).enumerate() {
            let xb = z_train.select_rows(chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| y_train[i]).collect();
            let (batch_loss, grads) = model
                .loss_and_gradients_std(&xb, &yb, cfg.loss)
                .map_err(|e| abort(format!("batch {batch_idx}: {e}"), epoch, history.clone()))?;
            loss_sum += batch_loss * chunk.len() as f64;
            let (next_params, next_adam) = adam_update(&params, &grads, &adam)
                .map_err(|e| abort(format!("batch {batch_idx}: {e}"), epoch, history.clone()))?;
            params = next_params;
            adam = next_adam;
            model.unpack_params(&params)?;
        }
        history.train_loss.push(loss_sum / n as f64);

        let val_scores = model.scores_std(&z_val)?;
        let val_loss = loss_from_scores(cfg.loss, &val_scores, &y_val);
        if !val_loss.is_finite() {
            return Err(abort(
                "non-finite validation loss".into(),
                epoch,
                history.clone(),
            ));
        }
        history.val_loss.push(val_loss);
        history.stopped_epoch = epoch;

        if val_loss < best_loss {
            best_loss = val_loss;
            best_params.copy_from_slice(&params);
            history.best_epoch = epoch;
            epochs_since_improve = 0;
        } else {
            epochs_since_improve += 1;
            if epochs_since_improve >= cfg.patience {
                break;
            }
        }
    }

    history.restored_best = history.best_epoch != history.stopped_epoch;
    model.unpack_params(&best_params)?;
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mse,
    Auc,
    LogLoss,
}

impl Metric {
    /// The conventional headline metric for a response kind.
    pub fn for_kind(kind: ResponseKind) -> Metric {
        match kind {
            ResponseKind::Continuous => Metric::Mse,
            ResponseKind::Binary => Metric::Auc,
        }
    }

    /// True when larger values are better.
    pub fn higher_is_better(&self) -> bool {
        matches!(self, Metric::Auc)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Auc => "auc",
            Metric::LogLoss => "logloss",
        }
    }
}

/// Evaluate a metric on targets and predictions (probabilities for the
/// binary metrics).
pub fn evaluate(metric: Metric, y: &[f64], pred: &[f64]) -> Result<f64> {
    if y.len() != pred.len() {
        return Err(CsnError::Config(format!(
            "evaluate: {} targets vs {} predictions",
            y.len(),
            pred.len()
        )));
    }
    if y.is_empty() {
        return Err(CsnError::Data("evaluate on empty vectors".into()));
    }
    match metric {
        Metric::Mse => {
            Ok(y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
        }
        Metric::LogLoss => {
            let eps = 1e-12;
            Ok(y
                .iter()
                .zip(pred)
                .map(|(&t, &p)| {
                    let p = p.clamp(eps, 1.0 - eps);
                    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
                })
                .sum::<f64>()
                / y.len() as f64)
        }
        Metric::Auc => auc(y, pred),
    }
}

/// Mann-Whitney rank statistic with midranks for tied predictions.
fn auc(y: &[f64], pred: &[f64]) -> Result<f64> {
    let n_pos = y.iter().filter(|&&t| t > 0.5).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CsnError::MetricUndefined(format!(
            "AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| pred[a].partial_cmp(&pred[b]).expect("finite predictions"));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pred[idx[j + 1]] == pred[idx[i]] {
            j += 1;
        }
        // Midrank of the tie group spanning sorted positions i..=j (1-based).
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &r in &idx[i..=j] {
            if y[r] > 0.5 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos = n_pos as f64;
    let n_neg = n_neg as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Candidate values per hyperparameter for the cross spline net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsnSearchSpace {
    pub lr: Vec<f64>,
    pub batch_fraction: Vec<f64>,
    pub k: Vec<usize>,
    pub m: Vec<usize>,
    pub d: Vec<usize>,
}

impl Default for CsnSearchSpace {
    /// The stock tuning grid for sigmoid-basis nets.
    fn default() -> Self {
        CsnSearchSpace {
            lr: vec![0.01, 0.02],
            batch_fraction: vec![0.01, 0.02],
            k: vec![0, 1, 2, 3],
            m: vec![3, 5, 7],
            d: vec![10, 20, 30, 40],
        }
    }
}

impl CsnSearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.lr.is_empty()
            || self.batch_fraction.is_empty()
            || self.k.is_empty()
            || self.m.is_empty()
            || self.d.is_empty()
        {
            return Err(CsnError::Config(
                "every search-space list must be non-empty".into(),
            ));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> CsnDraw {
        CsnDraw {
            lr: *self.lr.choose(rng).expect("validated"),
            batch_fraction: *self.batch_fraction.choose(rng).expect("validated"),
            k: *self.k.choose(rng).expect("validated"),
            m: *self.m.choose(rng).expect("validated"),
            d: *self.d.choose(rng).expect("validated"),
        }
    }
}

/// One sampled hyperparameter assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsnDraw {
    pub lr: f64,
    pub batch_fraction: f64,
    pub k: usize,
    pub m: usize,
    pub d: usize,
}

/// Candidate values per hyperparameter for the dense baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcnnSearchSpace {
    pub layers: Vec<Vec<usize>>,
    pub lr: Vec<f64>,
    pub batch_fraction: Vec<f64>,
}

impl Default for FcnnSearchSpace {
    fn default() -> Self {
        FcnnSearchSpace {
            layers: vec![
                vec![20, 10, 5],
                vec![40, 20, 10],
                vec![60, 30, 15],
                vec![80, 40, 20],
                vec![100, 50, 25],
                vec![120, 60, 30, 15],
                vec![100, 50, 25, 12],
                vec![80, 40, 20, 10],
                vec![10, 20, 40, 20, 10],
                vec![15, 30, 60, 30, 15],
            ],
            lr: vec![0.0001, 0.0005, 0.001, 0.002, 0.004, 0.008, 0.01, 0.015, 0.02],
            batch_fraction: vec![0.01, 0.02, 0.04],
        }
    }
}

impl FcnnSearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.lr.is_empty() || self.batch_fraction.is_empty() {
            return Err(CsnError::Config(
                "every search-space list must be non-empty".into(),
            ));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> FcnnDraw {
        FcnnDraw {
            layers: self.layers.choose(rng).expect("validated").clone(),
            lr: *self.lr.choose(rng).expect("validated"),
            batch_fraction: *self.batch_fraction.choose(rng).expect("validated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcnnDraw {
    pub layers: Vec<usize>,
    pub lr: f64,
    pub batch_fraction: f64,
}

/// Log entry for one search trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord<C> {
    pub index: usize,
    pub config: C,
    /// Per-trial model-init/shuffle seed, derived from the search seed.
    pub seed: u64,
    pub val_loss: Option<f64>,
    /// Validation AUC, binary tasks only.
    pub val_auc: Option<f64>,
    pub best_epoch: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome<C> {
    pub best: C,
    pub best_index: usize,
    pub best_model: Model,
    pub trials: Vec<TrialRecord<C>>,
}

/// Uniform random search over a product space: draws `trials` independent
/// samples (seeded), fits each in parallel, and selects the draw with the
/// lowest validation loss. The full per-trial log is returned, merged by
/// trial index.
pub fn random_search<C, S, B>(
    sample: S,
    trials: usize,
    data: &Dataset,
    build: B,
    seed: u64,
) -> Result<SearchOutcome<C>>
where
    C: Clone + Send + Sync,
    S: Fn(&mut ChaCha8Rng) -> C,
    B: Fn(&C, u64) -> Result<(Model, TrainConfig)> + Sync,
{
    if trials < 1 {
        return Err(CsnError::Config("random search needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5ea4c4));
    let draws: Vec<(usize, C, u64)> = (0..trials)
        .map(|i| (i, sample(&mut rng), mix_seed(seed, 0x741a1 + i as u64)))
        .collect();

    let val_rows = data.rows_for(Split::Val);
    let (x_val, y_val) = data.subset(&val_rows);

    let results: Vec<(TrialRecord<C>, Option<Model>)> = draws
        .into_par_iter()
        .map(|(index, config, trial_seed)| {
            let run = || -> Result<(f64, Option<f64>, usize, Model)> {
                let (model, cfg) = build(&config, trial_seed)?;
                let (fitted, history) = fit(model, data, &cfg)?;
                let val_loss = history.val_loss[history.best_epoch];
                let val_auc = match data.kind {
                    ResponseKind::Binary => {
                        let pred = fitted.predict(&x_val)?;
                        Some(evaluate(Metric::Auc, &y_val, &pred)?)
                    }
                    ResponseKind::Continuous => None,
                };
                Ok((val_loss, val_auc, history.best_epoch, fitted))
            };
            match run() {
                Ok((val_loss, val_auc, best_epoch, model)) => (
                    TrialRecord {
                        index,
                        config,
                        seed: trial_seed,
                        val_loss: Some(val_loss),
                        val_auc,
                        best_epoch: Some(best_epoch),
                        error: None,
                    },
                    Some(model),
                ),
                Err(e) => (
                    TrialRecord {
                        index,
                        config,
                        seed: trial_seed,
                        val_loss: None,
                        val_auc: None,
                        best_epoch: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut trials_log = Vec::with_capacity(trials);
    let mut best: Option<(usize, f64, Model)> = None;
    for (record, model) in results {
        if let (Some(loss), Some(model)) = (record.val_loss, model) {
            let better = best.as_ref().map_or(true, |(_, b, _)| loss < *b);
            if better {
                best = Some((record.index, loss, model));
            }
        }
        trials_log.push(record);
    }
    trials_log.sort_by_key(|r| r.index);

    match best {
        Some((best_index, _, best_model)) => Ok(SearchOutcome {
            best: trials_log[best_index].config.clone(),
            best_index,
            best_model,
            trials: trials_log,
        }),
        None => {
            let reasons: Vec<String> = trials_log
                .iter()
                .map(|r| {
                    format!(
                        "trial {}: {}",
                        r.index,
                        r.error.as_deref().unwrap_or("unknown failure")
                    )
                })
                .collect();
            Err(CsnError::Config(format!(
                "all {trials} search trials failed: {}",
                reasons.join("; ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::model::{build_csn, CsnConfig, HeadKind};
    use crate::nncore::Matrix;
    use crate::spline::BasisKind;

    /// O(n^2) concordant-pair oracle with half credit for ties.
    fn auc_oracle(y: &[f64], pred: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] > 0.5 && y[j] <= 0.5 {
                    den += 1.0;
                    if pred[i] > pred[j] {
                        num += 1.0;
                    } else if pred[i] == pred[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    fn linear_dataset(n: usize, seed: u64) -> Dataset {
        // y = 2x, one feature, no noise; 70/30 train/val.
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(rng.random_range(-1.0..1.0));
        }
        let y: Vec<f64> = values.iter().map(|&v| 2.0 * v).collect();
        let n_train = (n as f64 * 0.7).round() as usize;
        let split = (0..n)
            .map(|i| if i < n_train { Split::Train } else { Split::Val })
            .collect();
        Dataset {
            x: Matrix::from_vec(n, 1, values).unwrap(),
            y,
            kind: ResponseKind::Continuous,
            feature_names: vec!["x1".into()],
            split,
            seed,
            scenario: None,
        }
    }

    fn identity_k0_config(seed: u64) -> CsnConfig {
        CsnConfig {
            basis: BasisKind::Identity,
            m: 1,
            d: 2,
            k: 0,
            head: HeadKind::Regression,
            lr: 0.05,
            batch_fraction: 0.2,
            decay: 0.995,
            patience: 50,
            max_epochs: 200,
            seed,
        }
    }

    #[test]
    fn converges_on_noiseless_linear_data() {
        let data = linear_dataset(300, 5);
        let cfg = identity_k0_config(5);
        let model = build_csn(&cfg, &data.training_stats().unwrap()).unwrap();
        let (fitted, history) = fit(model, &data, &cfg.train_config()).unwrap();
        let (x_train, y_train) = data.subset(&data.rows_for(Split::Train));
        let pred = fitted.predict(&x_train).unwrap();
        let mse = evaluate(Metric::Mse, &y_train, &pred).unwrap();
        assert!(mse < 1e-3, "train mse {mse} after {} epochs", history.epochs());
    }

    #[test]
    fn early_stopping_contract_patience_one() {
        // Tiny lr on an easy problem: epoch 0 sets the best; if epoch 1 fails
        // to improve, patience 1 stops at epoch index 1 and restores epoch 0.
        // Force the situation with max lr so validation loss oscillates.
        let data = linear_dataset(60, 3);
        let mut cfg = identity_k0_config(3);
        cfg.lr = 5.0;
        cfg.patience = 1;
        cfg.max_epochs = 50;
        let model = build_csn(&cfg, &data.training_stats().unwrap()).unwrap();
        let (_, history) = fit(model, &data, &cfg.train_config()).unwrap();
        let e = history.stopped_epoch;
        // Stopped exactly `patience` epochs after the best one.
        assert_eq!(history.best_epoch + 1, e);
        assert_eq!(history.val_loss.len(), e + 1);
        assert!(history.restored_best);
        let best = history.val_loss[history.best_epoch];
        assert!(history.val_loss.iter().all(|&v| v >= best));
    }

    #[test]
    fn fit_is_deterministic() {
        let data = linear_dataset(120, 9);
        let cfg = identity_k0_config(9);
        let stats = data.training_stats().unwrap();
        let run = || {
            let model = build_csn(&cfg, &stats).unwrap();
            fit(model, &data, &cfg.train_config()).unwrap()
        };
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(h1, h2);
        assert_eq!(m1.pack_params(), m2.pack_params());
    }

    #[test]
    fn best_epoch_has_minimum_recorded_val_loss() {
        let data = linear_dataset(150, 2);
        let cfg = identity_k0_config(2);
        let model = build_csn(&cfg, &data.training_stats().unwrap()).unwrap();
        let (_, history) = fit(model, &data, &cfg.train_config()).unwrap();
        let min = history
            .val_loss
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(history.val_loss[history.best_epoch], min);
    }

    #[test]
    fn evaluate_trivial_cases() {
        // Perfect separation.
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let pred = vec![0.1, 0.2, 0.8, 0.9];
        assert_eq!(evaluate(Metric::Auc, &y, &pred).unwrap(), 1.0);
        // Exact predictions.
        assert_eq!(evaluate(Metric::Mse, &pred, &pred).unwrap(), 0.0);
        // Three of four positive/negative pairs concordant.
        let y = vec![0.0, 1.0, 0.0, 1.0];
        let pred = vec![0.1, 0.35, 0.4, 0.8];
        assert_eq!(auc_oracle(&y, &pred), 0.75);
        assert_eq!(evaluate(Metric::Auc, &y, &pred).unwrap(), 0.75);
    }

    #[test]
    fn auc_matches_pair_counting_oracle_with_ties() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for case in 0..50 {
            let n = rng.random_range(5..40);
            let mut y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..2))).collect();
            // Guarantee both classes.
            y[0] = 0.0;
            y[1] = 1.0;
            // Coarse rounding to force ties.
            let pred: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0.0_f64..1.0) * 5.0).round() / 5.0)
                .collect();
            let ours = evaluate(Metric::Auc, &y, &pred).unwrap();
            let want = auc_oracle(&y, &pred);
            assert!((ours - want).abs() < 1e-12, "case {case}: {ours} vs {want}");
        }
    }

    #[test]
    fn auc_single_class_is_undefined() {
        let err = evaluate(Metric::Auc, &[1.0, 1.0], &[0.3, 0.6]).unwrap_err();
        assert!(matches!(err, CsnError::MetricUndefined(_)));
    }

    #[test]
    fn auc_invariant_under_monotone_transforms() {
        let y = vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let pred = vec![0.3, 0.7, 0.4, 0.4, 0.9, 0.1, 0.55, 0.62];
        let base = evaluate(Metric::Auc, &y, &pred).unwrap();
        let exp: Vec<f64> = pred.iter().map(|&p| p.exp()).collect();
        let lin: Vec<f64> = pred.iter().map(|&p| 3.0 * p + 7.0).collect();
        assert_eq!(evaluate(Metric::Auc, &y, &exp).unwrap(), base);
        assert_eq!(evaluate(Metric::Auc, &y, &lin).unwrap(), base);
    }

    #[test]
    fn logloss_of_perfect_probabilities_is_tiny() {
        let y = vec![0.0, 1.0, 1.0];
        let ll = evaluate(Metric::LogLoss, &y, &y).unwrap();
        assert!(ll >= 0.0 && ll <= 1e-11, "{ll}");
    }

    #[test]
    fn single_combination_search_returns_it() {
        let data = linear_dataset(100, 4);
        let space = CsnSearchSpace {
            lr: vec![0.05],
            batch_fraction: vec![0.2],
            k: vec![0],
            m: vec![1],
            d: vec![2],
        };
        space.validate().unwrap();
        let stats = data.training_stats().unwrap();
        let outcome = random_search(
            |rng| space.sample(rng),
            1,
            &data,
            |draw, seed| {
                let cfg = CsnConfig {
                    basis: BasisKind::Identity,
                    m: draw.m,
                    d: draw.d,
                    k: draw.k,
                    head: HeadKind::Regression,
                    lr: draw.lr,
                    batch_fraction: draw.batch_fraction,
                    decay: 0.995,
                    patience: 10,
                    max_epochs: 30,
                    seed,
                };
                Ok((build_csn(&cfg, &stats)?, cfg.train_config()))
            },
            11,
        )
        .unwrap();
        assert_eq!(outcome.trials.len(), 1);
        assert_eq!(outcome.best_index, 0);
        assert_eq!(outcome.best.d, 2);
    }

    #[test]
    fn search_selects_lower_validation_loss() {
        let data = linear_dataset(100, 8);
        let stats = data.training_stats().unwrap();
        // Two trials: index 0 barely trains (1 epoch), index 1 trains fully,
        // so trial 1 must win on a noiseless convex problem.
        let counter = std::cell::Cell::new(0usize);
        let outcome = random_search(
            |_| {
                let i = counter.get();
                counter.set(i + 1);
                i
            },
            2,
            &data,
            |&i, seed| {
                let mut cfg = identity_k0_config(seed);
                cfg.max_epochs = if i == 0 { 1 } else { 150 };
                Ok((build_csn(&cfg, &stats)?, cfg.train_config()))
            },
            21,
        )
        .unwrap();
        let l0 = outcome.trials[0].val_loss.unwrap();
        let l1 = outcome.trials[1].val_loss.unwrap();
        assert!(l1 < l0, "losses {l0} vs {l1}");
        assert_eq!(outcome.best_index, 1);
    }

    #[test]
    fn all_failed_search_aggregates_reasons() {
        let data = linear_dataset(50, 6);
        let err = random_search(
            |_| (),
            2,
            &data,
            |_, _| -> Result<(Model, TrainConfig)> {
                Err(CsnError::Config("boom".into()))
            },
            3,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("trial 0") && msg.contains("trial 1"), "{msg}");
    }
}
