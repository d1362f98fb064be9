//! Brute-force references for the optimality and equivalence claims.
//!
//! Nothing here goes through the solver code paths: the only shared numerical
//! routine is `thin_qr` (and `svd_small` for angles). Elimination and
//! triangular solves are local to this module.

use crate::dense::{svd_small, thin_qr, DenseMatrix, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::sparse::LinearOperator;
use crate::vector;

/// Size limits for the dense oracles.
pub const DENSE_SOLVE_CAP: usize = 2000;
pub const BASIS_CAP: usize = 300;

#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub x: Vec<f64>,
    /// `||A x - b||`.
    pub residual: f64,
    /// `1e-10 (||A||_F ||x|| + ||b||)`; a backward-stable solve lands well
    /// inside it.
    pub bound: f64,
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<DenseSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::InvalidInput("dense_solve needs a square system".into()));
    }
    if n > DENSE_SOLVE_CAP {
        return Err(Error::InvalidInput(format!("dense_solve is capped at n = {DENSE_SOLVE_CAP}")));
    }
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut rhs = b.to_vec();
    let scale = a.max_abs();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[piv][col].abs() <= f64::EPSILON * scale * n as f64 || m[piv][col] == 0.0 {
            return Err(Error::SingularMatrix);
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            if f != 0.0 {
                for j in col..n {
                    m[i][j] -= f * m[col][j];
                }
                rhs[i] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (rhs[i] - s) / m[i][i];
    }
    let residual = vector::norm2(&vector::sub(&a.matvec(&x), b));
    let bound = 1e-10 * (a.frobenius_norm() * vector::norm2(&x) + vector::norm2(b));
    Ok(DenseSolution { x, residual, bound })
}

fn upper_solve(r: &DenseMatrix, rhs: &[f64]) -> Vec<f64> {
    let d = rhs.len();
    let mut c = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|j| r[(i, j)] * c[j]).sum();
        c[i] = (rhs[i] - s) / r[(i, i)];
    }
    c
}

/// Least squares `min ||B c - rhs||` through thin QR of `B`; dependent
/// columns get coefficient zero.
fn lstsq(bm: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let d = bm.ncols();
    let qr = thin_qr(bm, DEFAULT_RANK_TOL)?;
    let kept = bm.select_columns(&qr.kept);
    let qr2 = thin_qr(&kept, 0.0)?;
    let ck = upper_solve(&qr2.r, &qr2.q.tr_matvec(rhs));
    let mut c = vec![0.0; d];
    for (t, &j) in qr.kept.iter().enumerate() {
        c[j] = ck[t];
    }
    Ok(c)
}

fn check_basis(op: &dyn LinearOperator, b: &[f64], x0: &[f64], w: &DenseMatrix) -> Result<()> {
    let n = op.dim();
    if b.len() != n || x0.len() != n || w.nrows() != n {
        return Err(Error::InvalidInput("oracle dimensions do not agree".into()));
    }
    if w.ncols() > BASIS_CAP {
        return Err(Error::InvalidInput(format!("oracle basis is capped at {BASIS_CAP} columns")));
    }
    Ok(())
}

/// `min_c ||b - A (x0 + W c)||` with `A W` formed column by column.
pub fn bruteforce_min_residual(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    w: &DenseMatrix,
) -> Result<(f64, Vec<f64>)> {
    check_basis(op, b, x0, w)?;
    let r0 = vector::sub(b, &op.apply_vec(x0));
    if w.ncols() == 0 || w.max_abs() == 0.0 {
        return Ok((vector::norm2(&r0), vec![0.0; w.ncols()]));
    }
    let aw: Vec<Vec<f64>> = w.columns().iter().map(|c| op.apply_vec(c)).collect();
    let awm = DenseMatrix::from_columns(op.dim(), &aw);
    if awm.max_abs() == 0.0 {
        return Ok((vector::norm2(&r0), vec![0.0; w.ncols()]));
    }
    let c = lstsq(&awm, &r0)?;
    let res = vector::sub(&r0, &awm.matvec(&c));
    Ok((vector::norm2(&res), c))
}

/// `min_c ||x* - (x0 + W c)||_A` for SPD `A`, with `x*` from [`dense_solve`].
/// `W` is orthonormalized (and rank-reduced) first; the Galerkin system
/// `Q^T A Q d = Q^T (b - A x0)` is solved by Cholesky. Returns the minimum and
/// the coefficients in terms of the columns of `W`.
pub fn bruteforce_min_anorm_error(a: &DenseMatrix, b: &[f64], x0: &[f64], w: &DenseMatrix) -> Result<(f64, Vec<f64>)> {
    check_basis(a, b, x0, w)?;
    let xs = dense_solve(a, b)?.x;
    let anorm = |e: &[f64]| vector::dot(e, &a.matvec(e)).max(0.0).sqrt();
    let e0 = vector::sub(&xs, x0);
    if w.ncols() == 0 || w.max_abs() == 0.0 {
        return Ok((anorm(&e0), vec![0.0; w.ncols()]));
    }
    let qr = thin_qr(w, DEFAULT_RANK_TOL)?;
    let q = qr.q;
    let aq = a.matmul(&q);
    let g = q.tr_matmul(&aq);
    let r0 = vector::sub(b, &a.matvec(x0));
    let rhs = q.tr_matvec(&r0);
    let d = cholesky_solve(&g, &rhs)?;
    let x = {
        let mut x = x0.to_vec();
        vector::axpy(1.0, &q.matvec(&d), &mut x);
        x
    };
    // coefficients against W's kept columns: W_kept = Q R_kept
    let rk = qr.r.select_columns(&qr.kept);
    let ck = upper_solve(&rk, &d);
    let mut c = vec![0.0; w.ncols()];
    for (t, &j) in qr.kept.iter().enumerate() {
        c[j] = ck[t];
    }
    Ok((anorm(&vector::sub(&xs, &x)), c))
}

fn cholesky_solve(g: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let d = g.nrows();
    let mut l = DenseMatrix::zeros(d, d);
    for j in 0..d {
        let s = g[(j, j)] - (0..j).map(|p| l[(j, p)] * l[(j, p)]).sum::<f64>();
        if !(s > 0.0) {
            return Err(Error::NotPositiveDefinite { curvature: s });
        }
        l[(j, j)] = s.sqrt();
        for i in j + 1..d {
            let s = g[(i, j)] - (0..j).map(|p| l[(i, p)] * l[(j, p)]).sum::<f64>();
            l[(i, j)] = s / l[(j, j)];
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        let s: f64 = (0..i).map(|p| l[(i, p)] * y[p]).sum();
        y[i] = (rhs[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|p| l[(p, i)] * x[p]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    Ok(x)
}

/// Principal angles between `range(X)` and `range(Y)`, ascending. Small
/// angles come from the sines (singular values of `(I - Q_X Q_X^T) Q_Y`),
/// large ones from the cosines, so both ends are accurate. Dependent columns
/// reduce the count.
pub fn subspace_angles(x: &DenseMatrix, y: &DenseMatrix) -> Result<Vec<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::InvalidInput("subspaces live in different dimensions".into()));
    }
    let qx = thin_qr(x, DEFAULT_RANK_TOL)?;
    let qy = thin_qr(y, DEFAULT_RANK_TOL)?;
    if qx.rank < x.ncols() || qy.rank < y.ncols() {
        log::warn!("subspace_angles: rank-deficient input, {} / {} columns kept", qx.rank, qy.rank);
    }
    let (qx, qy) = (qx.q, qy.q);
    let p = qx.ncols().min(qy.ncols());
    let cosines = svd_small(&qx.tr_matmul(&qy))?.sing;
    let mut angles: Vec<f64> = cosines.iter().take(p).map(|c| c.clamp(-1.0, 1.0).acos()).collect();
    if qx.ncols() == qy.ncols() {
        let perp = qy.sub(&qx.matmul(&qx.tr_matmul(&qy)));
        let mut sines = svd_small(&perp)?.sing;
        sines.truncate(p);
        sines.reverse();
        for (i, angle) in angles.iter_mut().enumerate() {
            if cosines[i] * cosines[i] >= 0.5 {
                *angle = sines[i].clamp(0.0, 1.0).asin();
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}
