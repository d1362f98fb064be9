//! Small dense kernels.
//!
//! Every projected subproblem in the recycling solvers (Hessenberg least
//! squares, tridiagonal eigenproblems, harmonic Ritz pencils, snapshot SVDs)
//! is small: its size is bounded by the restart length plus the recycle
//! dimension. The routines here are straightforward, allocation-happy
//! implementations tuned for accuracy rather than speed.

mod eig;
mod lstsq;
mod qr;
mod svd;

pub use eig::{
    generalized_eig_small, small_eig_general, sym_eig, sym_tridiag_eig, EigenPair, EigenValue,
    EIG_SIZE_CAP,
};
pub use lstsq::{hessenberg_lstsq, GivensLstsq};
pub use qr::{thin_qr, ThinQr, DEFAULT_RANK_TOL};
pub use svd::{svd_small, Svd};

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::vector;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::InvalidInput(format!(
                "dense matrix {}x{} needs {} entries, got {}",
                nrows,
                ncols,
                nrows * ncols,
                data.len()
            )));
        }
        if !vector::all_finite(&data) {
            return Err(Error::InvalidInput("dense matrix has non-finite entries".into()));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(nrows, ncols, rows.concat())
    }

    /// Builds an `nrows x cols.len()` matrix from column vectors.
    pub fn from_columns(nrows: usize, cols: &[Vec<f64>]) -> Self {
        let ncols = cols.len();
        let mut m = Self::zeros(nrows, ncols);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), nrows, "column {j} has wrong length");
            for (i, &v) in c.iter().enumerate() {
                m.data[i * ncols + j] = v;
            }
        }
        m
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
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.data[i * self.ncols + j]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.ncols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        assert_eq!(col.len(), self.nrows);
        for (i, &v) in col.iter().enumerate() {
            self.data[i * self.ncols + j] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t.data[j * self.nrows + i] = self.data[i * self.ncols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            let orow = &mut out.data[i * other.ncols..(i + 1) * other.ncols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    vector::axpy(a, other.row(l), orow);
                }
            }
        }
        out
    }

    /// `self^T * other` without forming the transpose.
    pub fn tr_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.nrows, other.nrows, "tr_matmul dimension mismatch");
        let mut out = Self::zeros(self.ncols, other.ncols);
        for l in 0..self.nrows {
            let orow = other.row(l);
            for (i, &a) in self.row(l).iter().enumerate() {
                if a != 0.0 {
                    vector::axpy(a, orow, &mut out.data[i * other.ncols..(i + 1) * other.ncols]);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows).map(|i| vector::dot(self.row(i), x)).collect()
    }

    /// `self^T * x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                vector::axpy(xi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        vector::norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            data: vector::sub(&self.data, &other.data),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.nrows, idx.len());
        for i in 0..self.nrows {
            for (jj, &j) in idx.iter().enumerate() {
                out.data[i * idx.len() + jj] = self.data[i * self.ncols + j];
            }
        }
        out
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.nrows, other.nrows);
        let ncols = self.ncols + other.ncols;
        let mut data = Vec::with_capacity(self.nrows * ncols);
        for i in 0..self.nrows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Self {
            nrows: self.nrows,
            ncols,
            data,
        }
    }

    pub fn is_upper_hessenberg(&self) -> bool {
        (0..self.nrows).all(|i| (0..self.ncols).all(|l| i <= l + 1 || self[(i, l)] == 0.0))
    }

    /// Largest deviation of `self^T self` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.tr_matmul(self);
        g.sub(&Self::identity(self.ncols)).max_abs()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidInput("LU needs a square matrix".into()));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if pmax <= f64::EPSILON * scale * n as f64 || pmax == 0.0 {
                return Err(Error::SingularMatrix);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = b.columns().iter().map(|c| self.solve(c)).collect();
        DenseMatrix::from_columns(self.n, &cols)
    }
}

/// Solves an upper-triangular system using the leading `n x n` block of `r`.
pub fn back_substitute(r: &DenseMatrix, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| r[(i, j)] * y[j]).sum();
        y[i] = (rhs[i] - s) / r[(i, i)];
    }
    y
}
