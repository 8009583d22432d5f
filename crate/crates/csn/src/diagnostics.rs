//! Post-hoc model probes: ICE curves, 1d/2d partial dependence, permutation
//! importance, and the pairwise interaction-share statistic (the squared
//! Friedman-Popescu H). All probes are read-only over the model and
//! deterministic given their seed; each artifact serializes to CSV.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Split};
use crate::error::{CsnError, Result};
use crate::model::Model;
use crate::nncore::Matrix;
use crate::train::{evaluate, Metric};
use crate::util::mix_seed;

/// Anything that maps a feature matrix to one prediction per row.
pub trait Predictor {
    fn predict_batch(&self, x: &Matrix) -> Result<Vec<f64>>;
}

impl Predictor for Model {
    fn predict_batch(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.predict(x)
    }
}

/// A prediction path over a feature grid. For ICE the values belong to one
/// anchored observation; for PDP they average the per-row matrix in
/// `ice_rows` (kept so the mean-of-rows identity can be checked exactly).
#[derive(Debug, Clone)]
pub struct Curve {
    pub feature: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub ice_rows: Option<Matrix>,
    pub anchor_row: Option<usize>,
    pub warning: Option<String>,
}

impl Curve {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "grid,value")?;
        for (g, v) in self.grid.iter().zip(&self.values) {
            writeln!(f, "{g},{v}")?;
        }
        Ok(())
    }
}

/// A 2d partial-dependence lattice, serialized in long format.
#[derive(Debug, Clone)]
pub struct Surface {
    pub feature_j: String,
    pub feature_k: String,
    pub grid_j: Vec<f64>,
    pub grid_k: Vec<f64>,
    /// `values[a][b]` is the PD at `grid_j[a]`, `grid_k[b]`.
    pub values: Matrix,
}

impl Surface {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{},{},value", self.feature_j, self.feature_k)?;
        for (a, gj) in self.grid_j.iter().enumerate() {
            for (b, gk) in self.grid_k.iter().enumerate() {
                writeln!(f, "{gj},{gk},{}", self.values.get(a, b))?;
            }
        }
        Ok(())
    }
}

/// Per-feature score degradation under column permutation; larger means more
/// important.
#[derive(Debug, Clone)]
pub struct ImportanceTable {
    pub metric: Metric,
    pub repeats: usize,
    pub seed: u64,
    pub baseline: f64,
    /// `(feature name, importance)`, in dataset column order.
    pub entries: Vec<(String, f64)>,
}

impl ImportanceTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "feature,score")?;
        for (name, score) in &self.entries {
            writeln!(f, "{name},{score}")?;
        }
        Ok(())
    }

    /// Entries sorted by descending importance.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut out = self.entries.clone();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores"));
        out
    }
}

/// Squared interaction share of one feature pair, in [0,1].
#[derive(Debug, Clone)]
pub struct HStat {
    pub feature_j: String,
    pub feature_k: String,
    pub h_squared: f64,
    pub subsample: usize,
    pub warning: Option<String>,
}

fn equally_spaced_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    if size <= 1 {
        return vec![lo];
    }
    (0..size)
        .map(|i| lo + (hi - lo) * i as f64 / (size - 1) as f64)
        .collect()
}

fn feature_range(dataset: &Dataset, feature: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..dataset.n_rows() {
        let v = dataset.x.get(r, feature);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn grid_for(dataset: &Dataset, feature: usize, grid_size: usize) -> (Vec<f64>, Option<String>) {
    let (lo, hi) = feature_range(dataset, feature);
    if (hi - lo).abs() < 1e-12 {
        (
            vec![lo],
            Some(format!(
                "feature `{}` is constant over the data; single-point grid",
                dataset.feature_names[feature]
            )),
        )
    } else {
        (equally_spaced_grid(lo, hi, grid_size), None)
    }
}

/// Individual conditional expectation: re-predict one observation while its
/// `feature` sweeps a grid spanning the observed range.
pub fn ice(
    model: &dyn Predictor,
    dataset: &Dataset,
    row: usize,
    feature: usize,
    grid_size: usize,
) -> Result<Curve> {
    if row >= dataset.n_rows() {
        return Err(CsnError::Config(format!(
            "row {row} out of range ({} rows)",
            dataset.n_rows()
        )));
    }
    let (grid, warning) = grid_for(dataset, feature, grid_size);
    let mut probe = Matrix::zeros(grid.len(), dataset.n_features());
    for (i, &g) in grid.iter().enumerate() {
        probe.row_mut(i).copy_from_slice(dataset.x.row(row));
        probe.set(i, feature, g);
    }
    let values = model.predict_batch(&probe)?;
    Ok(Curve {
        feature: dataset.feature_names[feature].clone(),
        grid,
        values,
        ice_rows: None,
        anchor_row: Some(row),
        warning,
    })
}

/// Seeded uniform draw of an anchor row, for ICE probes.
pub fn pick_anchor_row(dataset: &Dataset, seed: u64) -> usize {
    let mut rows: Vec<usize> = (0..dataset.n_rows()).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xa2c402)));
    rows[0]
}

fn subsample_rows(n: usize, subsample: usize, seed: u64) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5b5a3)));
    rows.truncate(subsample.min(n));
    rows
}

/// 1d partial dependence: the mean of ICE curves over a seeded subsample of
/// rows. The per-row matrix is kept on the curve.
pub fn pdp1(
    model: &dyn Predictor,
    dataset: &Dataset,
    feature: usize,
    grid_size: usize,
    subsample: usize,
    seed: u64,
) -> Result<Curve> {
    let rows = subsample_rows(dataset.n_rows(), subsample, seed);
    let (grid, warning) = grid_for(dataset, feature, grid_size);
    let base = dataset.x.select_rows(&rows);
    let mut ice_rows = Matrix::zeros(rows.len(), grid.len());
    for (gi, &g) in grid.iter().enumerate() {
        let mut probe = base.clone();
        let col = vec![g; rows.len()];
        probe.set_col(feature, &col);
        let pred = model.predict_batch(&probe)?;
        for (ri, &v) in pred.iter().enumerate() {
            ice_rows.set(ri, gi, v);
        }
    }
    let values: Vec<f64> = (0..grid.len())
        .map(|gi| (0..rows.len()).map(|ri| ice_rows.get(ri, gi)).sum::<f64>() / rows.len() as f64)
        .collect();
    Ok(Curve {
        feature: dataset.feature_names[feature].clone(),
        grid,
        values,
        ice_rows: Some(ice_rows),
        anchor_row: None,
        warning,
    })
}

/// 2d partial dependence on a `grid_size x grid_size` lattice.
pub fn pdp2(
    model: &dyn Predictor,
    dataset: &Dataset,
    feature_j: usize,
    feature_k: usize,
    grid_size: usize,
    subsample: usize,
    seed: u64,
) -> Result<Surface> {
    if feature_j == feature_k {
        return Err(CsnError::Config("pdp2 needs two distinct features".into()));
    }
    let rows = subsample_rows(dataset.n_rows(), subsample, seed);
    let (grid_j, _) = grid_for(dataset, feature_j, grid_size);
    let (grid_k, _) = grid_for(dataset, feature_k, grid_size);
    let base = dataset.x.select_rows(&rows);
    let mut values = Matrix::zeros(grid_j.len(), grid_k.len());
    for (a, &gj) in grid_j.iter().enumerate() {
        for (b, &gk) in grid_k.iter().enumerate() {
            let mut probe = base.clone();
            probe.set_col(feature_j, &vec![gj; rows.len()]);
            probe.set_col(feature_k, &vec![gk; rows.len()]);
            let pred = model.predict_batch(&probe)?;
            values.set(a, b, pred.iter().sum::<f64>() / pred.len() as f64);
        }
    }
    Ok(Surface {
        feature_j: dataset.feature_names[feature_j].clone(),
        feature_k: dataset.feature_names[feature_k].clone(),
        grid_j,
        grid_k,
        values,
    })
}

/// Evaluation split used by metric-based diagnostics: test when present,
/// otherwise validation, otherwise all rows.
fn evaluation_rows(dataset: &Dataset) -> Vec<usize> {
    let test = dataset.rows_for(Split::Test);
    if !test.is_empty() {
        return test;
    }
    let val = dataset.rows_for(Split::Val);
    if !val.is_empty() {
        return val;
    }
    (0..dataset.n_rows()).collect()
}

/// Permutation importance: metric degradation (MSE/log-loss increase, AUC
/// decrease) when one feature column is permuted on the evaluation split,
/// averaged over `repeats` seeded permutations.
pub fn permutation_importance(
    model: &dyn Predictor,
    dataset: &Dataset,
    metric: Metric,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceTable> {
    if repeats < 1 {
        return Err(CsnError::Config("repeats must be at least 1".into()));
    }
    let rows = evaluation_rows(dataset);
    let (x, y) = dataset.subset(&rows);
    let baseline_pred = model.predict_batch(&x)?;
    let baseline = evaluate(metric, &y, &baseline_pred)?;

    let mut entries = Vec::with_capacity(dataset.n_features());
    for feature in 0..dataset.n_features() {
        let col = x.col(feature);
        let mut total = 0.0;
        for rep in 0..repeats {
            let mut perm = col.clone();
            let branch = (feature * repeats + rep) as u64;
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x9e43 + branch)));
            let mut probe = x.clone();
            probe.set_col(feature, &perm);
            let pred = model.predict_batch(&probe)?;
            let score = evaluate(metric, &y, &pred)?;
            total += if metric.higher_is_better() {
                baseline - score
            } else {
                score - baseline
            };
        }
        entries.push((
            dataset.feature_names[feature].clone(),
            total / repeats as f64,
        ));
    }
    Ok(ImportanceTable {
        metric,
        repeats,
        seed,
        baseline,
        entries,
    })
}

/// Squared Friedman-Popescu statistic for a feature pair: the share of the
/// joint partial-dependence variance not explained by the two univariate
/// partial dependences, over a seeded subsample. All three PD functions are
/// mean-centered; the result is clipped to [0,1].
pub fn h_statistic(
    model: &dyn Predictor,
    dataset: &Dataset,
    feature_j: usize,
    feature_k: usize,
    subsample: usize,
    seed: u64,
) -> Result<HStat> {
    if feature_j == feature_k {
        return Err(CsnError::Config(
            "interaction statistic needs two distinct features".into(),
        ));
    }
    let rows = subsample_rows(dataset.n_rows(), subsample, seed);
    let s = rows.len();
    let base = dataset.x.select_rows(&rows);

    // pd_j[i] = mean over rows l of f(x_l with feature j set to x_i[j]).
    let pd_over = |features: &[usize], i: usize| -> Result<f64> {
        let mut probe = base.clone();
        for &f in features {
            probe.set_col(f, &vec![base.get(i, f); s]);
        }
        let pred = model.predict_batch(&probe)?;
        Ok(pred.iter().sum::<f64>() / s as f64)
    };

    let mut pd_j = Vec::with_capacity(s);
    let mut pd_k = Vec::with_capacity(s);
    let mut pd_jk = Vec::with_capacity(s);
    for i in 0..s {
        pd_j.push(pd_over(&[feature_j], i)?);
        pd_k.push(pd_over(&[feature_k], i)?);
        pd_jk.push(pd_over(&[feature_j, feature_k], i)?);
    }
    center(&mut pd_j);
    center(&mut pd_k);
    center(&mut pd_jk);

    // Grouping the univariate terms keeps the statistic bitwise symmetric
    // in (j, k).
    let num: f64 = (0..s)
        .map(|i| {
            let r = pd_jk[i] - (pd_j[i] + pd_k[i]);
            r * r
        })
        .sum();
    let den: f64 = pd_jk.iter().map(|v| v * v).sum();

    let (h_squared, warning) = if den <= 1e-300 {
        (
            0.0,
            Some("joint partial dependence is constant; statistic defined as 0".into()),
        )
    } else {
        ((num / den).clamp(0.0, 1.0), None)
    };
    Ok(HStat {
        feature_j: dataset.feature_names[feature_j].clone(),
        feature_k: dataset.feature_names[feature_k].clone(),
        h_squared,
        subsample: s,
        warning,
    })
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}
