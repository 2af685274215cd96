//! Dense row-major feature matrix.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense row-major matrix of `f64` values.
///
/// Rows are observations, columns are features. A matrix with zero columns
/// is legal and represents a frame whose features have not been assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    /// Wraps a flat row-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_flat(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ArityMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { data, rows, cols })
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ArityMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            data,
            rows: rows.len(),
            cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// New matrix containing the given rows, in the given order.
    pub fn gather(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            rows: indices.len(),
            cols: self.cols,
        }
    }

    /// New matrix containing the contiguous row range `[lo, hi)`.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Matrix {
        Matrix {
            data: self.data[lo * self.cols..hi * self.cols].to_vec(),
            rows: hi - lo,
            cols: self.cols,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::ArityMismatch {
                expected: self.cols,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// True if every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Per-column mean and population standard deviation.
    ///
    /// Columns with zero spread report a standard deviation of 1 so that
    /// standardization leaves them untouched.
    pub fn column_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let mut means = vec![0.0; self.cols];
        let mut stds = vec![0.0; self.cols];
        if self.rows == 0 {
            return (means, vec![1.0; self.cols]);
        }
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                means[j] += v;
            }
        }
        let n = self.rows as f64;
        for m in means.iter_mut() {
            *m /= n;
        }
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                let d = v - means[j];
                stds[j] += d * d;
            }
        }
        for s in stds.iter_mut() {
            *s = libm::sqrt(*s / n);
            if *s == 0.0 || !s.is_finite() {
                *s = 1.0;
            }
        }
        (means, stds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gather_and_slice_agree() {
        let m = Matrix::from_flat(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 2).unwrap();
        assert_eq!(m.gather(&[1, 2]).data(), m.slice_rows(1, 3).data());
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn from_rows_rejects_ragged() {
        let r1 = [1.0, 2.0];
        let r2 = [3.0];
        assert!(Matrix::from_rows(&[&r1, &r2]).is_err());
    }

    #[test]
    fn column_stats_constant_column_gets_unit_std() {
        let m = Matrix::from_flat(vec![2.0, 1.0, 2.0, 3.0], 2, 2).unwrap();
        let (means, stds) = m.column_stats();
        assert_eq!(means, vec![2.0, 2.0]);
        assert_eq!(stds[0], 1.0);
        assert_eq!(stds[1], 1.0);
    }
}
