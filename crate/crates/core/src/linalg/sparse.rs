//! Compressed sparse column storage.

use crate::error::{check_len, Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::operator::LinearOperator;
use crate::Scalar;

/// Sparse matrix in compressed-sparse-column layout.
///
/// Row indices are strictly increasing within each column and every stored
/// value is finite. Explicit zeros are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix<T> {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CscMatrix<T> {
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        check_len("col_ptr", ncols + 1, col_ptr.len())?;
        check_len("values", row_idx.len(), values.len())?;
        if col_ptr[0] != 0 || col_ptr[ncols] != row_idx.len() {
            return Err(Error::InvalidStructure(
                "column pointers must start at 0 and end at nnz".into(),
            ));
        }
        for c in 0..ncols {
            let (start, end) = (col_ptr[c], col_ptr[c + 1]);
            if start > end {
                return Err(Error::InvalidStructure(format!(
                    "column pointers decrease at column {c}"
                )));
            }
            let rows = &row_idx[start..end];
            for (k, &r) in rows.iter().enumerate() {
                if r >= nrows {
                    return Err(Error::IndexOutOfRange { index: r, dim: nrows });
                }
                if k > 0 && rows[k - 1] >= r {
                    return Err(Error::InvalidStructure(format!(
                        "row indices not strictly increasing in column {c}"
                    )));
                }
            }
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("sparse matrix values"));
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, T)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows {
                return Err(Error::IndexOutOfRange { index: r, dim: nrows });
            }
            if c >= ncols {
                return Err(Error::IndexOutOfRange { index: c, dim: ncols });
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
            last = Some((r, c));
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let m = Self::new(nrows, ncols, col_ptr, row_idx, values)?;
        Ok(m.pruned())
    }

    /// Exact zeros of `dense` are not stored.
    pub fn from_dense(dense: &DenseMatrix<T>) -> Result<Self> {
        let (nrows, ncols) = (dense.nrows(), dense.ncols());
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for c in 0..ncols {
            for r in 0..nrows {
                let v = dense.get(r, c);
                if v != T::zero() {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self::new(nrows, ncols, col_ptr, row_idx, values)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for c in 0..self.ncols {
            for (r, v) in self.col_iter(c) {
                d.set(r, c, v);
            }
        }
        d
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|&v| v != T::zero()) {
            return self;
        }
        let mut col_ptr = Vec::with_capacity(self.ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for c in 0..self.ncols {
            for (r, v) in self.col_iter(c) {
                if v != T::zero() {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `(row, value)` pairs of column `c`.
    #[inline]
    pub fn col_iter(&self, c: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// `out += alpha * A[:, c]`
    #[inline]
    pub fn add_col_to(&self, c: usize, alpha: T, out: &mut [T]) {
        for (r, v) in self.col_iter(c) {
            out[r] += alpha * v;
        }
    }

    /// `A[:, c] . x`
    #[inline]
    pub fn col_dot(&self, c: usize, x: &[T]) -> T {
        let mut acc = T::zero();
        for (r, v) in self.col_iter(c) {
            acc += v * x[r];
        }
        acc
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        y.iter_mut().for_each(|v| *v = T::zero());
        for (c, &xc) in x.iter().enumerate() {
            if xc != T::zero() {
                self.add_col_to(c, xc, y);
            }
        }
    }

    /// `y = A^T x`
    pub fn tr_mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for (c, yc) in y.iter_mut().enumerate() {
            *yc = self.col_dot(c, x);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.ncols];
        self.tr_mul_vec_into(x, &mut y);
        y
    }

    /// Sub-matrix made of the listed columns, in the listed order.
    pub fn submatrix_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(cols.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for &c in cols {
            if c >= self.ncols {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    dim: self.ncols,
                });
            }
            let range = self.col_ptr[c]..self.col_ptr[c + 1];
            row_idx.extend_from_slice(&self.row_idx[range.clone()]);
            values.extend_from_slice(&self.values[range]);
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: cols.len(),
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&Self]) -> Result<Self> {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        for b in blocks {
            check_len("vstack column count", ncols, b.ncols)?;
        }
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let nnz = blocks.iter().map(|b| b.nnz()).sum();
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for c in 0..ncols {
            let mut offset = 0;
            for b in blocks {
                for (r, v) in b.col_iter(c) {
                    row_idx.push(r + offset);
                    values.push(v);
                }
                offset += b.nrows;
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Transpose, returned again in CSC layout (i.e. the CSR view of `self`).
    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            counts[r + 1] += 1;
        }
        for r in 0..self.nrows {
            counts[r + 1] += counts[r];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for c in 0..self.ncols {
            for (r, v) in self.col_iter(c) {
                let pos = next[r];
                row_idx[pos] = c;
                values[pos] = v;
                next[r] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Dense `A A^T`.
    pub fn gram_outer(&self) -> DenseMatrix<T> {
        let mut g = DenseMatrix::zeros(self.nrows, self.nrows);
        for c in 0..self.ncols {
            let range = self.col_ptr[c]..self.col_ptr[c + 1];
            let rows = &self.row_idx[range.clone()];
            let vals = &self.values[range];
            for (a, (&ra, &va)) in rows.iter().zip(vals).enumerate() {
                for (&rb, &vb) in rows[..=a].iter().zip(&vals[..=a]) {
                    let cur = g.get(ra, rb);
                    g.set(ra, rb, cur + va * vb);
                }
            }
        }
        for i in 0..self.nrows {
            for j in 0..i {
                let v = g.get(i, j);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Largest absolute entry of `A^T x`.
    pub fn tr_mul_norm_inf(&self, x: &[T]) -> T {
        (0..self.ncols).fold(T::zero(), |acc, c| acc.max(self.col_dot(c, x).abs()))
    }
}

impl<T: Scalar> LinearOperator<T> for CscMatrix<T> {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.mul_vec_into(x, y);
    }
    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        self.tr_mul_vec_into(x, y);
    }
}
