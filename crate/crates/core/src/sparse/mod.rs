//! Sparse operators and the operator abstraction the solvers are written
//! against.

mod market;

pub use market::{read_matrix_market, write_matrix_market};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Anything that can be applied to a vector. Solvers only ever see this.
pub trait LinearOperator {
    /// Number of rows (and columns: every operator here is square).
    fn dim(&self) -> usize;

    /// `y = op(x)`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `y = op^T(x)` when the transpose is available.
    fn apply_transpose(&self, _x: &[f64], _y: &mut [f64]) -> bool {
        false
    }

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// Compressed sparse row matrix. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from raw CSR arrays, checking every structural invariant.
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 {
            return Err(Error::InvalidInput("row_ptr must have nrows + 1 entries starting at 0".into()));
        }
        if col_idx.len() != vals.len() || *row_ptr.last().unwrap() != vals.len() {
            return Err(Error::InvalidInput("row_ptr, col_idx and vals disagree on nnz".into()));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidInput(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.iter().any(|&c| c >= ncols) {
                return Err(Error::InvalidInput(format!("column index out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!(
                    "column indices in row {i} are not strictly increasing"
                )));
            }
        }
        if !vector::all_finite(&vals) {
            return Err(Error::InvalidInput("matrix has non-finite values".into()));
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = entries.iter().find(|e| e.0 >= nrows || e.1 >= ncols) {
            return Err(Error::InvalidInput(format!(
                "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(nrows, ncols, row_ptr, col_idx, vals)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn from_diag(d: &[f64]) -> Result<Self> {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    /// Keeps the nonzeros of a dense matrix.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for i in 0..m.nrows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(vals.len());
        }
        Self {
            nrows: m.nrows(),
            ncols: m.ncols(),
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.vals[p]))
        })
    }

    /// `A v`, checking the dimension.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.ncols {
            return Err(Error::InvalidInput(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.ncols
            )));
        }
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(v, &mut y);
        Ok(y)
    }

    /// `y = A v` without dimension checks beyond slice bounds.
    pub fn matvec_into(&self, v: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.col_idx[lo..hi]
                .iter()
                .zip(&self.vals[lo..hi])
                .map(|(&j, &a)| a * v[j])
                .sum();
        }
    }

    /// `y = A^T v`.
    pub fn tr_matvec_into(&self, v: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[p]] += self.vals[p] * v[i];
            }
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
            .expect("transpose of a valid matrix is valid")
    }

    pub fn frobenius_norm(&self) -> f64 {
        vector::norm2(&self.vals)
    }

    /// `A - B` for matrices of the same shape.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::InvalidInput("shape mismatch in subtraction".into()));
        }
        let entries = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, -v)))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, entries)
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && *self == self.transpose()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (i, j, v) in self.triplets() {
            if i == j {
                d[i] = v;
            }
        }
        d
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) -> bool {
        self.tr_matvec_into(x, y);
        true
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x));
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) -> bool {
        y.copy_from_slice(&self.tr_matvec(x));
        true
    }
}

/// `A + shift I`.
pub struct Shifted<'a> {
    pub op: &'a dyn LinearOperator,
    pub shift: f64,
}

impl LinearOperator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        vector::axpy(self.shift, x, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) -> bool {
        if !self.op.apply_transpose(x, y) {
            return false;
        }
        vector::axpy(self.shift, x, y);
        true
    }
}

/// Power-iteration estimate of `||op||_2`, never larger than the true norm.
///
/// Uses `op^T op` when the transpose is available; otherwise iterates with
/// `op` itself and reports the largest growth ratio seen, which is still a
/// lower bound (and exact in the limit for symmetric operators). The start
/// vector is fixed, so the estimate is deterministic.
pub fn norm_estimate(op: &dyn LinearOperator, iters: usize) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let nv = vector::norm2(&v);
    vector::scale(1.0 / nv, &mut v);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut est = 0.0_f64;
    for _ in 0..iters.max(1) {
        op.apply(&v, &mut w);
        let nw = vector::norm2(&w);
        est = est.max(nw);
        if nw == 0.0 {
            break;
        }
        if op.apply_transpose(&w, &mut z) {
            let nz = vector::norm2(&z);
            if nz == 0.0 {
                break;
            }
            // ||A^T A v|| / ||A v|| is also a lower bound on ||A||
            est = est.max(nz / nw);
            v.copy_from_slice(&z);
            vector::scale(1.0 / nz, &mut v);
        } else {
            v.copy_from_slice(&w);
            vector::scale(1.0 / nw, &mut v);
        }
    }
    est
}

/// Spot-checks `|u^T A v - v^T A u|` on random pairs, relative to the size of
/// the products. Does not count toward any solver's matvec budget.
pub fn check_symmetric(op: &dyn LinearOperator, pairs: usize, seed: u64) -> Result<()> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let au = op.apply_vec(&u);
        let av = op.apply_vec(&v);
        let defect = (vector::dot(&u, &av) - vector::dot(&v, &au)).abs();
        let scale = vector::norm2(&u) * vector::norm2(&av) + vector::norm2(&v) * vector::norm2(&au);
        if defect > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric { defect });
        }
    }
    Ok(())
}

/// Spot-checks `v^T A v > 0` on random vectors.
pub fn check_positive(op: &dyn LinearOperator, samples: usize, seed: u64) -> Result<()> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let curvature = vector::dot(&v, &op.apply_vec(&v));
        if !(curvature > 0.0) {
            return Err(Error::NotPositiveDefinite { curvature });
        }
    }
    Ok(())
}
