//! Dense row-major `f64` matrices with the handful of products backprop needs.

use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(CsnError::Config(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn from_rows(data: &[Vec<f64>]) -> Result<Self> {
        let rows = data.len();
        let cols = data.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows * cols);
        for (i, row) in data.iter().enumerate() {
            if row.len() != cols {
                return Err(CsnError::Config(format!(
                    "ragged rows: row 0 has {cols} columns, row {i} has {}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Matrix { rows, cols, values })
    }

    /// Single-column matrix from a vector.
    pub fn column(values: Vec<f64>) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy of one column.
    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows, "column length mismatch");
        for (r, &x) in v.iter().enumerate() {
            self.set(r, c, x);
        }
    }

    /// New matrix from a subset of rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.row(i));
        }
        out
    }

    /// Position of the first non-finite entry, if any.
    pub fn first_nonfinite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| (i / self.cols, i % self.cols))
    }

    /// `self * rhs` for shapes (n,m) x (m,q).
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: ({},{}) x ({},{})",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = rhs.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// `self * rhs^T` for shapes (n,m) x (q,m); both operands are read row-wise.
    pub fn matmul_bt(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.cols,
            "matmul_bt: ({},{}) x ({},{})^T",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = rhs.row(j);
                *o = dot(a_row, b_row);
            }
        }
        out
    }

    /// `self^T * rhs` for shapes (n,m) x (n,q).
    pub fn matmul_at(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.rows, rhs.rows,
            "matmul_at: ({},{})^T x ({},{})",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let b_row = rhs.row(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let out_row = out.row_mut(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// Elementwise product.
    pub fn hadamard(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "hadamard shape mismatch");
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a * b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a + b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }

    pub fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!(self.shape(), rhs.shape(), "add_assign shape mismatch");
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a += b;
        }
    }

    /// Add a row vector to every row.
    pub fn add_row_broadcast(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.cols, "broadcast length mismatch");
        for r in 0..self.rows {
            for (a, b) in self.row_mut(r).iter_mut().zip(v) {
                *a += b;
            }
        }
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, &v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn matmul_matches_by_hand() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.values(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn transpose_products_agree_with_naive() {
        // Random-ish but fixed inputs; compare every product form against a
        // naive triple loop.
        let a = Matrix::from_vec(3, 4, (0..12).map(|i| (i as f64) * 0.37 - 1.9).collect()).unwrap();
        let b = Matrix::from_vec(4, 5, (0..20).map(|i| (i as f64) * -0.21 + 1.3).collect()).unwrap();

        let naive = |x: &Matrix, y: &Matrix| {
            let mut out = Matrix::zeros(x.rows(), y.cols());
            for i in 0..x.rows() {
                for j in 0..y.cols() {
                    let mut s = 0.0;
                    for k in 0..x.cols() {
                        s += x.get(i, k) * y.get(k, j);
                    }
                    out.set(i, j, s);
                }
            }
            out
        };

        let transpose = |x: &Matrix| {
            let mut out = Matrix::zeros(x.cols(), x.rows());
            for i in 0..x.rows() {
                for j in 0..x.cols() {
                    out.set(j, i, x.get(i, j));
                }
            }
            out
        };

        let ab = a.matmul(&b);
        assert_eq!(ab, naive(&a, &b));

        let bt = transpose(&b); // 5x4
        let abt = a.matmul_bt(&bt);
        assert_eq!(abt, naive(&a, &b));

        let at = transpose(&a); // 4x3
        let c = Matrix::from_vec(3, 2, (0..6).map(|i| (i as f64) - 2.5).collect()).unwrap();
        assert_eq!(a.matmul_at(&c), naive(&at, &c));
    }

    #[test]
    fn first_nonfinite_reports_position() {
        let mut m = Matrix::zeros(2, 3);
        assert!(m.first_nonfinite().is_none());
        m.set(1, 2, f64::NAN);
        assert_eq!(m.first_nonfinite(), Some((1, 2)));
    }
}
