//! The common tabular dataset form shared by generators, training and
//! diagnostics, plus the training-split statistics models are built from.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};
use crate::nncore::Matrix;
use crate::spline::ColumnStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn label(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(CsnError::Data(format!("unknown split label `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Row-major feature matrix with response, split assignment and provenance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub kind: ResponseKind,
    pub feature_names: Vec<String>,
    pub split: Vec<Split>,
    pub seed: u64,
    pub scenario: Option<String>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.x.rows() || self.split.len() != self.x.rows() {
            return Err(CsnError::Data(format!(
                "dataset rows disagree: x {}x{}, y {}, split {}",
                self.x.rows(),
                self.x.cols(),
                self.y.len(),
                self.split.len()
            )));
        }
        if self.feature_names.len() != self.x.cols() {
            return Err(CsnError::Data(format!(
                "{} feature names for {} columns",
                self.feature_names.len(),
                self.x.cols()
            )));
        }
        if self.kind == ResponseKind::Binary {
            if let Some(bad) = self.y.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(CsnError::Data(format!(
                    "binary response contains value {bad}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn rows_for(&self, split: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Feature block and response for the given row indices.
    pub fn subset(&self, rows: &[usize]) -> (Matrix, Vec<f64>) {
        let x = self.x.select_rows(rows);
        let y = rows.iter().map(|&i| self.y[i]).collect();
        (x, y)
    }

    pub fn split_counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for s in &self.split {
            match s {
                Split::Train => c.0 += 1,
                Split::Val => c.1 += 1,
                Split::Test => c.2 += 1,
            }
        }
        c
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| CsnError::Config(format!("unknown feature `{name}`")))
    }

    /// Statistics of the training split, used for standardization and knot
    /// placement.
    pub fn training_stats(&self) -> Result<TrainingStats> {
        let rows = self.rows_for(Split::Train);
        if rows.is_empty() {
            return Err(CsnError::Data("dataset has no training rows".into()));
        }
        let (x, _) = self.subset(&rows);
        Ok(TrainingStats::from_matrix(&x, self.feature_names.clone()))
    }

    /// Canonical CSV form: feature columns, `target`, `split`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("target");
        header.push("split");
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut record: Vec<String> = self.x.row(r).iter().map(|v| format_value(*v)).collect();
            record.push(format_value(self.y[r]));
            record.push(self.split[r].label().to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the canonical CSV form produced by [`Dataset::write_csv`].
    pub fn read_csv(path: &Path, kind: ResponseKind) -> Result<Dataset> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let target_pos = headers
            .iter()
            .position(|h| h == "target")
            .ok_or_else(|| CsnError::Data("missing `target` column".into()))?;
        let split_pos = headers
            .iter()
            .position(|h| h == "split")
            .ok_or_else(|| CsnError::Data("missing `split` column".into()))?;
        let feature_cols: Vec<usize> = (0..headers.len())
            .filter(|&i| i != target_pos && i != split_pos)
            .collect();
        let feature_names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

        let mut values = Vec::new();
        let mut y = Vec::new();
        let mut split = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| {
                        CsnError::Data(format!(
                            "line {}: cannot parse `{}` column",
                            line + 2,
                            headers[i]
                        ))
                    })
            };
            for &i in &feature_cols {
                values.push(parse(i)?);
            }
            y.push(parse(target_pos)?);
            split.push(Split::parse(record.get(split_pos).unwrap_or("?"))?);
        }
        let n = y.len();
        let ds = Dataset {
            x: Matrix::from_vec(n, feature_names.len(), values)?,
            y,
            kind,
            feature_names,
            split,
            seed: 0,
            scenario: None,
        };
        ds.validate()?;
        Ok(ds)
    }
}

fn format_value(v: f64) -> String {
    // `{}` on f64 prints the shortest string that parses back exactly,
    // keeping CSV output byte-stable across runs.
    format!("{v}")
}

/// Per-feature training statistics: means and standard deviations for
/// standardization plus sorted standardized samples for knot placement.
#[derive(Debug, Clone)]
pub struct TrainingStats {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub columns: Vec<ColumnStats>,
}

impl TrainingStats {
    pub fn from_matrix(x: &Matrix, feature_names: Vec<String>) -> TrainingStats {
        let n = x.rows() as f64;
        let p = x.cols();
        let mut means = vec![0.0; p];
        for r in 0..x.rows() {
            for (m, &v) in means.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; p];
        for r in 0..x.rows() {
            for ((var, &v), &m) in vars.iter_mut().zip(x.row(r)).zip(&means) {
                *var += (v - m) * (v - m);
            }
        }
        let denom = (n - 1.0).max(1.0);
        let stds: Vec<f64> = vars.iter().map(|v| (v / denom).sqrt()).collect();

        let columns = (0..p)
            .map(|j| {
                let s = safe_std(stds[j]);
                let standardized: Vec<f64> =
                    (0..x.rows()).map(|r| (x.get(r, j) - means[j]) / s).collect();
                ColumnStats::from_values(&standardized)
            })
            .collect();
        TrainingStats {
            feature_names,
            means,
            stds,
            columns,
        }
    }

    pub fn p(&self) -> usize {
        self.means.len()
    }

    pub fn standardizer(&self) -> Standardizer {
        Standardizer {
            means: self.means.clone(),
            stds: self.stds.iter().map(|&s| safe_std(s)).collect(),
        }
    }
}

fn safe_std(s: f64) -> f64 {
    if s > 1e-12 {
        s
    } else {
        1.0
    }
}

/// Shift/scale transform to zero mean, unit variance in training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn identity(p: usize) -> Standardizer {
        Standardizer {
            means: vec![0.0; p],
            stds: vec![1.0; p],
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.means.len(), "standardizer width mismatch");
        let mut out = x.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            for ((v, &m), &s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}
