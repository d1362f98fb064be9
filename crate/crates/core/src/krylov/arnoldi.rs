use super::BREAKDOWN_TOL;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::LinearOperator;
use crate::vector;

/// Orthonormal Krylov basis `V_{j+1}` with its Hessenberg matrix.
///
/// Column `l` of `H` is stored with its `l + 2` leading entries. After a
/// happy breakdown the basis is not extended, so `V` has only `j` columns.
#[derive(Debug, Clone)]
pub struct ArnoldiState {
    v: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    beta: f64,
    normest: f64,
    breakdown: bool,
}

impl ArnoldiState {
    /// Starts from `start / ||start||`.
    pub fn new(start: &[f64]) -> Result<Self> {
        let beta = vector::norm2(start);
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput("Arnoldi start vector must be nonzero and finite".into()));
        }
        let mut v1 = start.to_vec();
        vector::scale(1.0 / beta, &mut v1);
        Ok(Self {
            v: vec![v1],
            h: Vec::new(),
            beta,
            normest: 0.0,
            breakdown: false,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of completed steps.
    pub fn j(&self) -> usize {
        self.h.len()
    }

    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    /// Largest `||op v_l||` seen so far; a lower bound on `||op||`.
    pub fn normest(&self) -> f64 {
        self.normest
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// The vector the next step will multiply.
    pub fn last(&self) -> &[f64] {
        self.v.last().expect("basis is never empty")
    }

    /// Hessenberg column `l` (`l + 2` entries).
    pub fn h_column(&self, l: usize) -> &[f64] {
        &self.h[l]
    }

    /// `H` as a dense `(j+1) x j` matrix.
    pub fn hessenberg(&self) -> DenseMatrix {
        let j = self.j();
        let mut h = DenseMatrix::zeros(j + 1, j);
        for (l, col) in self.h.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                h[(i, l)] = x;
            }
        }
        h
    }

    /// One step with the operator applied here.
    pub fn extend(&mut self, op: &dyn LinearOperator) -> bool {
        let w = op.apply_vec(self.last());
        self.push(w)
    }

    /// One step given `w = op(v_j)`: modified Gram-Schmidt plus one full
    /// reorthogonalization pass. Returns `true` on happy breakdown.
    pub fn push(&mut self, mut w: Vec<f64>) -> bool {
        assert!(!self.breakdown, "Arnoldi extended past a breakdown");
        let j = self.j();
        self.normest = self.normest.max(vector::norm2(&w));
        let mut col = vec![0.0; j + 2];
        for _ in 0..2 {
            for (i, vi) in self.v.iter().enumerate() {
                let c = vector::dot(vi, &w);
                vector::axpy(-c, vi, &mut w);
                col[i] += c;
            }
        }
        let hn = vector::norm2(&w);
        col[j + 1] = hn;
        self.h.push(col);
        if hn <= BREAKDOWN_TOL * self.normest || hn == 0.0 {
            self.breakdown = true;
        } else {
            vector::scale(1.0 / hn, &mut w);
            self.v.push(w);
        }
        self.breakdown
    }

    /// `V_j y`.
    pub fn combine(&self, y: &[f64]) -> Vec<f64> {
        vector::combine(&self.v[..y.len()], y, self.v[0].len())
    }
}
