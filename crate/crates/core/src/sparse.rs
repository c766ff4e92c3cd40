//! Minimal compressed-sparse-row matrices.
//!
//! Graph operators are symmetric and reused across thousands of forward and
//! backward passes, so the only operations needed are row iteration and
//! `sparse * dense` products. Columns are sorted within each row.

use crate::error::{Error, Result};
use crate::scalar::{Mat, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Builds from per-row `(column, value)` lists; columns are sorted and
    /// duplicates within a row are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= ncols {
                    return Err(Error::dims(format!("column {c} out of range (ncols {ncols})")));
                }
                if last == Some(c) {
                    let tail = values.len() - 1;
                    values[tail] += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Csr {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Sorted `(column, value)` entries of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// `self * rhs` with a dense right factor.
    pub fn mul_dense(&self, rhs: &Mat<T>) -> Result<Mat<T>> {
        if rhs.nrows() != self.ncols {
            return Err(Error::dims(format!(
                "csr ({}x{}) * dense ({}x{})",
                self.nrows,
                self.ncols,
                rhs.nrows(),
                rhs.ncols()
            )));
        }
        let mut out = Mat::zeros(self.nrows, rhs.ncols());
        // column-major: walk output columns so both column slices are contiguous
        for c in 0..rhs.ncols() {
            let rhs_col = rhs.column(c);
            let mut out_col = out.column_mut(c);
            for i in 0..self.nrows {
                let lo = self.row_ptr[i];
                let hi = self.row_ptr[i + 1];
                let mut acc = T::zero();
                for k in lo..hi {
                    acc += self.values[k] * rhs_col[self.col_idx[k]];
                }
                out_col[i] = acc;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Mat<T> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest absolute entry (zero for an empty matrix).
    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Block-diagonal concatenation, used for disjoint graph unions.
    pub fn block_diag(blocks: &[&Csr<T>]) -> Csr<T> {
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let nnz = blocks.iter().map(|b| b.nnz()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        let mut col_offset = 0;
        for b in blocks {
            for i in 0..b.nrows {
                for (j, v) in b.row(i) {
                    col_idx.push(j + col_offset);
                    values.push(v);
                }
                row_ptr.push(col_idx.len());
            }
            col_offset += b.ncols;
        }
        Csr {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}
