use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::vector;

/// Thin singular value decomposition `M = left * diag(sing) * right^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `n x s` with orthonormal columns, `s = min(n, k)`.
    pub left: DenseMatrix,
    /// Descending, nonnegative.
    pub sing: Vec<f64>,
    /// `k x s` with orthonormal columns.
    pub right: DenseMatrix,
}

const SWEEP_CAP: usize = 60;

/// One-sided Jacobi SVD. Intended for the small projected matrices that
/// appear in selection and the oracle, not for large operators.
pub fn svd_small(m: &DenseMatrix) -> Result<Svd> {
    let (n, k) = (m.nrows(), m.ncols());
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("svd needs a nonempty matrix".into()));
    }
    if !vector::all_finite(m.data()) {
        return Err(Error::InvalidInput("svd input has non-finite entries".into()));
    }
    if n < k {
        let t = svd_small(&m.transpose())?;
        return Ok(Svd {
            left: t.right,
            sing: t.sing,
            right: t.left,
        });
    }

    // Orthogonalize the columns of W = M V by plane rotations.
    let mut w = m.columns();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut converged = false;
    for _ in 0..SWEEP_CAP {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = vector::dot(&w[p], &w[p]);
                let beta = vector::dot(&w[q], &w[q]);
                let gamma = vector::dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure("Jacobi SVD did not converge".into()));
    }

    let mut sing: Vec<f64> = w.iter().map(|c| vector::norm2(c)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sing[b].total_cmp(&sing[a]));
    let smax = sing[order[0]];
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut sorted = Vec::with_capacity(k);
    for &j in &order {
        let s = sing[j];
        if s > f64::EPSILON * smax * n as f64 && s > 0.0 {
            let mut u = w[j].clone();
            vector::scale(1.0 / s, &mut u);
            left.push(u);
            sorted.push(s);
        } else {
            left.push(Vec::new());
            sorted.push(0.0);
        }
        right.push(v[j].clone());
    }
    complete_basis(&mut left, n);
    sing.clone_from(&sorted);

    Ok(Svd {
        left: DenseMatrix::from_columns(n, &left),
        sing,
        right: DenseMatrix::from_columns(k, &right),
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (a, b) = (&mut lo[p], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = c * xv - s * yv;
        *y = s * xv + c * yv;
    }
}

/// Fills empty slots (zero singular values) with unit vectors orthogonal to
/// the populated ones, trying coordinate directions in turn.
fn complete_basis(cols: &mut [Vec<f64>], n: usize) {
    let mut next = 0;
    for j in 0..cols.len() {
        if !cols[j].is_empty() {
            continue;
        }
        while next < n {
            let mut e = vec![0.0; n];
            e[next] = 1.0;
            next += 1;
            for _ in 0..2 {
                for c in cols.iter().filter(|c| !c.is_empty()) {
                    let d = vector::dot(c, &e);
                    vector::axpy(-d, c, &mut e);
                }
            }
            let nrm = vector::norm2(&e);
            if nrm > 0.5 {
                vector::scale(1.0 / nrm, &mut e);
                cols[j] = e;
                break;
            }
        }
    }
}
