//! Column-major dense matrices and Cholesky factorization.

use crate::error::{check_len, Error, Result};
use crate::linalg::operator::LinearOperator;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            check_len("dense row length", ncols, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<T>) -> Result<Self> {
        check_len("dense data length", nrows * ncols, data.len())?;
        Ok(Self { nrows, ncols, data })
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
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[c * self.nrows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[c * self.nrows + r] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[T] {
        &self.data[c * self.nrows..(c + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.nrows..(c + 1) * self.nrows]
    }

    pub fn as_col_major(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for c in 0..self.ncols {
            for r in 0..self.nrows {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = T::zero());
        for (c, &xc) in x.iter().enumerate() {
            if xc != T::zero() {
                for (yi, &a) in y.iter_mut().zip(self.col(c)) {
                    *yi += a * xc;
                }
            }
        }
    }

    pub fn tr_mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.nrows);
        for (c, yc) in y.iter_mut().enumerate() {
            *yc = crate::linalg::dot(self.col(c), x);
        }
    }

    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.ncols];
        self.tr_mul_vec_into(x, &mut y);
        y
    }

    /// `Aᵀ A`, exploiting symmetry.
    pub fn gram(&self) -> Self {
        let k = self.ncols;
        let mut g = Self::zeros(k, k);
        for j in 0..k {
            for i in 0..=j {
                let v = crate::linalg::dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn max_abs_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.nrows {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn add_diagonal(&mut self, d: &[T]) {
        for (i, &v) in d.iter().enumerate() {
            let cur = self.get(i, i);
            self.set(i, i, cur + v);
        }
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        Cholesky::factor(self)
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
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

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    // column-major, only the lower triangle is meaningful
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors a symmetric matrix; only the lower triangle of `a` is read.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        check_len("cholesky: square matrix", a.nrows(), a.ncols())?;
        let n = a.nrows();
        let mut l = a.as_col_major().to_vec();
        for j in 0..n {
            // left-looking: column j -= sum_{k<j} L[j,k] * L[:,k]
            for k in 0..j {
                let ljk = l[k * n + j];
                if ljk != T::zero() {
                    for i in j..n {
                        let v = l[k * n + i];
                        l[j * n + i] -= ljk * v;
                    }
                }
            }
            let d = l[j * n + j];
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    value: d.to_f64_lossy(),
                });
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                l[j * n + i] /= dj;
            }
            for i in 0..j {
                l[j * n + i] = T::zero();
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        // L y = b
        for j in 0..n {
            b[j] /= self.l[j * n + j];
            let bj = b[j];
            for i in (j + 1)..n {
                b[i] -= self.l[j * n + i] * bj;
            }
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let mut acc = b[j];
            for i in (j + 1)..n {
                acc -= self.l[j * n + i] * b[i];
            }
            b[j] = acc / self.l[j * n + j];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solves `mat · x = rhs` for symmetric positive definite `mat`.
pub fn cholesky_solve<T: Scalar>(mat: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    check_len("cholesky_solve rhs", mat.nrows(), rhs.len())?;
    Ok(mat.cholesky()?.solve(rhs))
}
