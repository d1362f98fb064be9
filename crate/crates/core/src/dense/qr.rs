use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::vector;

/// Relative tolerance below which a trailing Householder pivot counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Thin QR factorization with dependent columns dropped.
#[derive(Debug, Clone)]
pub struct ThinQr {
    /// `n x rank`, orthonormal columns.
    pub q: DenseMatrix,
    /// `rank x k`, upper triangular in the kept columns.
    pub r: DenseMatrix,
    pub rank: usize,
    /// Input columns that produced a new direction, in order.
    pub kept: Vec<usize>,
}

/// Householder thin QR of an `n x k` matrix.
///
/// Columns are processed left to right. After applying the reflectors built so
/// far, a column whose trailing part has norm at most `rank_tol * |R_11|` adds
/// no new reflector: its coefficients go into `R` against the existing
/// directions and it is reported as dropped. Diagonal entries of `R` are made
/// nonnegative.
pub fn thin_qr(m: &DenseMatrix, rank_tol: f64) -> Result<ThinQr> {
    let (n, k) = (m.nrows(), m.ncols());
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("thin_qr needs a nonempty matrix".into()));
    }
    if !(rank_tol >= 0.0) {
        return Err(Error::InvalidInput("rank_tol must be nonnegative".into()));
    }
    if !vector::all_finite(m.data()) {
        return Err(Error::InvalidInput("thin_qr input has non-finite entries".into()));
    }

    // reflectors[t] acts on rows t..n with unit vector v (stored over t..n)
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    let mut rcols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut kept = Vec::new();
    let mut pivot_ref = 0.0_f64;

    for j in 0..k {
        let mut a = m.column(j);
        for (t, v) in reflectors.iter().enumerate() {
            apply_reflector(v, &mut a[t..]);
        }
        let rank = reflectors.len();
        let trailing = if rank < n { vector::norm2(&a[rank..]) } else { 0.0 };
        let dependent = rank >= n
            || trailing == 0.0
            || (rank > 0 && trailing <= rank_tol * pivot_ref);
        if !dependent {
            let alpha = if a[rank] > 0.0 { -trailing } else { trailing };
            let mut v = a[rank..].to_vec();
            v[0] -= alpha;
            let vn = vector::norm2(&v);
            vector::scale(1.0 / vn, &mut v);
            reflectors.push(v);
            a[rank] = alpha;
            if rank == 0 {
                pivot_ref = alpha.abs();
            }
            kept.push(j);
        }
        let r_len = reflectors.len();
        rcols.push(a[..r_len].to_vec());
    }

    let rank = reflectors.len();
    let mut r = DenseMatrix::zeros(rank, k);
    for (j, col) in rcols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            r[(i, j)] = v;
        }
    }

    // Q = H_0 H_1 ... H_{r-1} [I; 0]
    let mut qcols = Vec::with_capacity(rank);
    for i in 0..rank {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for t in (0..rank).rev() {
            apply_reflector(&reflectors[t], &mut e[t..]);
        }
        qcols.push(e);
    }

    // Positive diagonal.
    for (i, &j) in kept.iter().enumerate() {
        if r[(i, j)] < 0.0 {
            for c in 0..k {
                r[(i, c)] = -r[(i, c)];
            }
            vector::scale(-1.0, &mut qcols[i]);
        }
    }

    Ok(ThinQr {
        q: DenseMatrix::from_columns(n, &qcols),
        r,
        rank,
        kept,
    })
}

#[inline]
fn apply_reflector(v: &[f64], x: &mut [f64]) {
    let s = 2.0 * vector::dot(v, x);
    vector::axpy(-s, v, x);
}
