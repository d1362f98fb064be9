use super::{svd_small, DenseMatrix};
use crate::error::{Error, Result};
use crate::vector;

/// Incremental least-squares solver for `min ||H y - g||` with `H` upper
/// Hessenberg, grown one column at a time.
///
/// Each new column is reduced with the stored Givens rotations and one new
/// rotation, so a step costs O(j). The current residual norm is available
/// without solving for `y`.
#[derive(Debug, Clone)]
pub struct GivensLstsq {
    /// Column `j` of the triangular factor, length `j + 1`.
    r: Vec<Vec<f64>>,
    /// Raw Hessenberg columns, kept for the rank-deficient fallback.
    h: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    rotations: Vec<(f64, f64)>,
    /// Rotated right-hand side, length `j + 1`.
    g: Vec<f64>,
}

impl GivensLstsq {
    /// Starts with an empty `1 x 0` system whose right-hand side is `rhs0`.
    pub fn new(rhs0: f64) -> Self {
        Self {
            r: Vec::new(),
            h: Vec::new(),
            rhs: vec![rhs0],
            rotations: Vec::new(),
            g: vec![rhs0],
        }
    }

    pub fn ncols(&self) -> usize {
        self.r.len()
    }

    /// Appends Hessenberg column `j` (`j + 2` entries) and the next
    /// right-hand side entry; returns the updated residual norm.
    pub fn push_column(&mut self, col: &[f64], next_rhs: f64) -> f64 {
        let j = self.r.len();
        assert_eq!(col.len(), j + 2, "Hessenberg column {j} needs {} entries", j + 2);
        self.h.push(col.to_vec());
        self.rhs.push(next_rhs);
        let mut c = col.to_vec();
        for (i, &(cs, sn)) in self.rotations.iter().enumerate() {
            let (a, b) = (c[i], c[i + 1]);
            c[i] = cs * a + sn * b;
            c[i + 1] = -sn * a + cs * b;
        }
        let (a, b) = (c[j], c[j + 1]);
        let rho = a.hypot(b);
        let (cs, sn) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, b / rho) };
        c[j] = rho;
        c.truncate(j + 1);
        self.r.push(c);
        self.rotations.push((cs, sn));
        self.g.push(next_rhs);
        let (ga, gb) = (self.g[j], self.g[j + 1]);
        self.g[j] = cs * ga + sn * gb;
        self.g[j + 1] = -sn * ga + cs * gb;
        self.residual()
    }

    /// Minimum of `||H y - g||` over the columns pushed so far.
    pub fn residual(&self) -> f64 {
        self.g.last().copied().unwrap_or(0.0).abs()
    }

    /// The last rotation `(c, s)`, if any.
    pub fn last_rotation(&self) -> Option<(f64, f64)> {
        self.rotations.last().copied()
    }

    /// Triangular diagonal entry of the last column.
    pub fn last_pivot(&self) -> Option<f64> {
        self.r.last().and_then(|c| c.last().copied())
    }

    /// Minimizer `y`. Falls back to the minimum-norm solution when the
    /// triangular factor is singular to working precision.
    pub fn solve(&self) -> Vec<f64> {
        let j = self.r.len();
        let rmax = self
            .r
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let singular = self
            .r
            .iter()
            .enumerate()
            .any(|(i, c)| c[i].abs() <= f64::EPSILON * rmax * j as f64);
        if singular {
            return self.min_norm_solution();
        }
        let mut y = vec![0.0; j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..j).map(|l| self.r[l][i] * y[l]).sum();
            y[i] = (self.g[i] - s) / self.r[i][i];
        }
        y
    }

    fn min_norm_solution(&self) -> Vec<f64> {
        let j = self.r.len();
        if j == 0 || self.h.iter().all(|c| c.iter().all(|&v| v == 0.0)) {
            return vec![0.0; j];
        }
        let mut hm = DenseMatrix::zeros(j + 1, j);
        for (l, c) in self.h.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                hm[(i, l)] = v;
            }
        }
        let svd = match svd_small(&hm) {
            Ok(s) => s,
            Err(_) => return vec![0.0; j],
        };
        let smax = svd.sing.first().copied().unwrap_or(0.0);
        let cutoff = f64::EPSILON * smax * (j + 1) as f64;
        let mut y = vec![0.0; j];
        for (idx, &s) in svd.sing.iter().enumerate() {
            if s > cutoff {
                let u = svd.left.column(idx);
                let coef = vector::dot(&u, &self.rhs) / s;
                let v = svd.right.column(idx);
                vector::axpy(coef, &v, &mut y);
            }
        }
        y
    }
}

/// Solves `min ||H y - rhs||` for an upper-Hessenberg `(j+1) x j` matrix by
/// Givens rotations. Returns `y` and the attained residual norm.
///
/// A rank-deficient `H` yields the minimum-norm minimizer.
pub fn hessenberg_lstsq(h: &DenseMatrix, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let j = h.ncols();
    if h.nrows() != j + 1 || rhs.len() != j + 1 {
        return Err(Error::InvalidInput(format!(
            "expected a {}x{} Hessenberg matrix and rhs of length {}",
            j + 1,
            j,
            j + 1
        )));
    }
    if !h.is_upper_hessenberg() {
        return Err(Error::InvalidInput("matrix is not upper Hessenberg".into()));
    }
    if !vector::all_finite(rhs) {
        return Err(Error::InvalidInput("rhs has non-finite entries".into()));
    }
    let mut ls = GivensLstsq::new(rhs[0]);
    for l in 0..j {
        let col: Vec<f64> = (0..l + 2).map(|i| h[(i, l)]).collect();
        ls.push_column(&col, rhs[l + 1]);
    }
    let y = ls.solve();
    let hy = h.matvec(&y);
    Ok((y, vector::norm2(&vector::sub(&hy, rhs))))
}
