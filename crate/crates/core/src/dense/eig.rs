//! Dense eigenvalue kernels.
//!
//! The symmetric path is Householder tridiagonalization followed by implicit
//! QL; the general path is Hessenberg reduction followed by Francis
//! double-shift QR to real Schur form with back-substitution for the
//! eigenvectors (the EISPACK `orthes`/`hqr2` sequence).

use super::{svd_small, DenseMatrix, LuFactor};
use crate::error::{Error, Result};
use crate::vector;

/// Largest matrix accepted by the general eigen-solvers.
pub const EIG_SIZE_CAP: usize = 500;

const EPS: f64 = f64::EPSILON;

/// Eigenvalue of a real matrix: real, or one member of a conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenValue {
    Real(f64),
    /// The pair `re +/- i im`, with `im > 0`.
    Pair { re: f64, im: f64 },
}

impl EigenValue {
    pub fn abs(&self) -> f64 {
        match *self {
            EigenValue::Real(v) => v.abs(),
            EigenValue::Pair { re, im } => re.hypot(im),
        }
    }
}

/// An eigenvalue with its real eigenvector (one column) or, for a conjugate
/// pair, a real basis `[p q]` of the invariant plane such that
/// `M p = re p - im q` and `M q = im p + re q`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: EigenValue,
    pub vectors: DenseMatrix,
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal. Values ascend; vectors are orthonormal columns.
pub fn sym_tridiag_eig(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, DenseMatrix)> {
    let m = diag.len();
    if m == 0 || offdiag.len() + 1 != m {
        return Err(Error::InvalidInput(
            "tridiagonal eigenproblem needs m >= 1 diagonal and m - 1 off-diagonal entries".into(),
        ));
    }
    if !vector::all_finite(diag) || !vector::all_finite(offdiag) {
        return Err(Error::InvalidInput("tridiagonal entries must be finite".into()));
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut v = vec![vec![0.0; m]; m];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    tql2(&mut d, &mut e, &mut v)?;
    Ok(sorted_sym(d, v))
}

/// Eigen-decomposition of a dense symmetric matrix (only the lower triangle
/// is read). Values ascend; vectors are orthonormal columns.
pub fn sym_eig(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidInput("sym_eig needs a nonempty square matrix".into()));
    }
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if j <= i { a[(i, j)] } else { a[(j, i)] }).collect())
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut d, &mut e, &mut v);
    // tred2 leaves the sub-diagonal in e[1..]; tql2 wants it in e[..n-1]
    e.rotate_left(1);
    e[n - 1] = 0.0;
    tql2(&mut d, &mut e, &mut v)?;
    Ok(sorted_sym(d, v))
}

fn sorted_sym(d: Vec<f64>, v: Vec<Vec<f64>>) -> (Vec<f64>, DenseMatrix) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (jj, &j) in order.iter().enumerate() {
        for i in 0..n {
            vecs[(i, jj)] = v[i][j];
        }
    }
    (values, vecs)
}

/// Householder reduction of a symmetric matrix to tridiagonal form, with the
/// orthogonal transformation accumulated in `v`.
fn tred2(d: &mut [f64], e: &mut [f64], v: &mut [Vec<f64>]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on a symmetric tridiagonal matrix (`d` diagonal, `e[i]`
/// coupling `i` and `i + 1`), rotating the columns of `v`.
fn tql2(d: &mut [f64], e: &mut [f64], v: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= EPS * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 30 * n.max(1) {
                    return Err(Error::ConvergenceFailure(
                        "symmetric QL iteration did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= EPS * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// All eigenpairs of a small real square matrix.
///
/// Real eigenvalues come with unit eigenvectors; each conjugate pair is
/// returned once, with a unit-Frobenius real basis of its invariant plane.
/// Values are listed in the order they appear on the Schur diagonal.
pub fn small_eig_general(m: &DenseMatrix) -> Result<Vec<EigenPair>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidInput("eigenproblem needs a nonempty square matrix".into()));
    }
    if n > EIG_SIZE_CAP {
        return Err(Error::InvalidInput(format!(
            "eigenproblem of size {n} exceeds the cap {EIG_SIZE_CAP}"
        )));
    }
    if !vector::all_finite(m.data()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut v = vec![vec![0.0; n]; n];
    orthes(&mut h, &mut v);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    hqr2(&mut h, &mut v, &mut d, &mut e)?;

    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if e[i] == 0.0 {
            let mut col: Vec<f64> = (0..n).map(|r| v[r][i]).collect();
            let nrm = vector::norm2(&col);
            if nrm > 0.0 {
                vector::scale(1.0 / nrm, &mut col);
            }
            out.push(EigenPair {
                value: EigenValue::Real(d[i]),
                vectors: DenseMatrix::from_columns(n, &[col]),
            });
            i += 1;
        } else {
            let mut p: Vec<f64> = (0..n).map(|r| v[r][i]).collect();
            let mut q: Vec<f64> = (0..n).map(|r| v[r][i + 1]).collect();
            let nrm = (vector::dot(&p, &p) + vector::dot(&q, &q)).sqrt();
            if nrm > 0.0 {
                vector::scale(1.0 / nrm, &mut p);
                vector::scale(1.0 / nrm, &mut q);
            }
            out.push(EigenPair {
                value: EigenValue::Pair {
                    re: d[i],
                    im: e[i].abs(),
                },
                vectors: DenseMatrix::from_columns(n, &[p, q]),
            });
            i += 2;
        }
    }
    Ok(out)
}

/// Condition number above which a pencil `(A, B)` is rejected.
pub const PENCIL_COND_LIMIT: f64 = 1e12;

/// Eigenpairs of the pencil `A v = theta B v`, by reduction to `B^{-1} A`.
pub fn generalized_eig_small(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidInput("pencil matrices must be square and equal size".into()));
    }
    let svd = svd_small(b)?;
    let smax = svd.sing.first().copied().unwrap_or(0.0);
    let smin = svd.sing.last().copied().unwrap_or(0.0);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= PENCIL_COND_LIMIT) {
        return Err(Error::IllConditionedPencil { cond });
    }
    let lu = LuFactor::new(b).map_err(|_| Error::IllConditionedPencil { cond })?;
    small_eig_general(&lu.solve_matrix(a))
}

/// Reduction to upper Hessenberg form by orthogonal similarity, accumulating
/// the transformation in `v`.
fn orthes(h: &mut [Vec<f64>], v: &mut [Vec<f64>]) {
    let n = h.len();
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let mut scale = 0.0;
        for row in h.iter().take(high + 1).skip(m) {
            scale += row[m - 1].abs();
        }
        if scale != 0.0 {
            let mut hh = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[i][m - 1] / scale;
                hh += ort[i] * ort[i];
            }
            let mut g = hh.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            hh -= ort[m] * g;
            ort[m] -= g;
            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[i][j];
                }
                f /= hh;
                for i in m..=high {
                    h[i][j] -= f * ort[i];
                }
            }
            for row in h.iter_mut().take(high + 1) {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * row[j];
                }
                f /= hh;
                for j in m..=high {
                    row[j] -= f * ort[j];
                }
            }
            ort[m] *= scale;
            h[m][m - 1] = scale * g;
        }
    }
    for (i, row) in v.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = if i == j { 1.0 } else { 0.0 };
        }
    }
    for m in (1..high).rev() {
        if h[m][m - 1] != 0.0 {
            for i in m + 1..=high {
                ort[i] = h[i][m - 1];
            }
            for j in m..=high {
                let mut g = 0.0;
                for i in m..=high {
                    g += ort[i] * v[i][j];
                }
                g = (g / ort[m]) / h[m][m - 1];
                for i in m..=high {
                    v[i][j] += g * ort[i];
                }
            }
        }
    }
}

fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Francis double-shift QR from Hessenberg to real Schur form, followed by
/// back-substitution for the eigenvectors.
#[allow(clippy::many_single_char_names, unused_assignments)]
fn hqr2(h: &mut [Vec<f64>], v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let nn = h.len();
    let mut n = nn as isize - 1;
    let low: isize = 0;
    let high = nn - 1;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t, mut w, mut x, mut y);

    let mut norm = 0.0;
    for (i, row) in h.iter().enumerate() {
        for val in row.iter().skip(i.saturating_sub(1)) {
            norm += val.abs();
        }
    }

    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let iter_cap = 30 * nn.max(1);
    while n >= low {
        let nu = n as usize;
        let mut l = n;
        while l > low {
            let lu = l as usize;
            s = h[lu - 1][lu - 1].abs() + h[lu][lu].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[lu][lu - 1].abs() < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            h[nu][nu] += exshift;
            d[nu] = h[nu][nu];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h[nu][nu - 1] * h[nu - 1][nu];
            p = (h[nu - 1][nu - 1] - h[nu][nu]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[nu][nu] += exshift;
            h[nu - 1][nu - 1] += exshift;
            x = h[nu][nu];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
                x = h[nu][nu - 1];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in nu - 1..nn {
                    z = h[nu - 1][j];
                    h[nu - 1][j] = q * z + p * h[nu][j];
                    h[nu][j] = q * h[nu][j] - p * z;
                }
                for row in h.iter_mut().take(nu + 1) {
                    z = row[nu - 1];
                    row[nu - 1] = q * z + p * row[nu];
                    row[nu] = q * row[nu] - p * z;
                }
                for row in v.iter_mut().take(high + 1) {
                    z = row[nu - 1];
                    row[nu - 1] = q * z + p * row[nu];
                    row[nu] = q * row[nu] - p * z;
                }
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            total_iter += 1;
            if total_iter > iter_cap {
                return Err(Error::ConvergenceFailure(format!(
                    "Francis QR did not converge within {iter_cap} sweeps"
                )));
            }
            let lu = l as usize;
            x = h[nu][nu];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[nu - 1][nu - 1];
                w = h[nu][nu - 1] * h[nu - 1][nu];
            }
            if iter == 10 {
                exshift += x;
                for (i, row) in h.iter_mut().enumerate().take(nu + 1) {
                    row[i] -= x;
                }
                s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for (i, row) in h.iter_mut().enumerate().take(nu + 1) {
                        row[i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            let mut m = nu - 2;
            loop {
                z = h[m][m];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[m + 1][m] + h[m][m + 1];
                q = h[m + 1][m + 1] - z - r - s;
                r = h[m + 2][m + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                if h[m][m - 1].abs() * (q.abs() + r.abs())
                    < EPS * (p.abs() * (h[m - 1][m - 1].abs() + z.abs() + h[m + 1][m + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[i][i - 2] = 0.0;
                if i > m + 2 {
                    h[i][i - 3] = 0.0;
                }
            }

            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[k][k - 1];
                    q = h[k + 1][k - 1];
                    r = if notlast { h[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[k][k - 1] = -s * x;
                    } else if lu != m {
                        h[k][k - 1] = -h[k][k - 1];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[k][j] + q * h[k + 1][j];
                        if notlast {
                            p += r * h[k + 2][j];
                            h[k + 2][j] -= p * z;
                        }
                        h[k][j] -= p * x;
                        h[k + 1][j] -= p * y;
                    }
                    for row in h.iter_mut().take(nu.min(k + 3) + 1) {
                        p = x * row[k] + y * row[k + 1];
                        if notlast {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k] -= p;
                        row[k + 1] -= p * q;
                    }
                    for row in v.iter_mut().take(high + 1) {
                        p = x * row[k] + y * row[k + 1];
                        if notlast {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k] -= p;
                        row[k + 1] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    if norm == 0.0 {
        return Ok(());
    }

    // Back-substitute to find vectors of the quasi-triangular form.
    for nu in (0..nn).rev() {
        p = d[nu];
        q = e[nu];
        if q == 0.0 {
            let mut l = nu;
            h[nu][nu] = 1.0;
            for i in (0..nu).rev() {
                w = h[i][i] - p;
                r = 0.0;
                for j in l..=nu {
                    r += h[i][j] * h[j][nu];
                }
                if e[i] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        h[i][nu] = if w != 0.0 { -r / w } else { -r / (EPS * norm) };
                    } else {
                        x = h[i][i + 1];
                        y = h[i + 1][i];
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        t = (x * s - z * r) / q;
                        h[i][nu] = t;
                        h[i + 1][nu] = if x.abs() > z.abs() {
                            (-r - w * t) / x
                        } else {
                            (-s - y * t) / z
                        };
                    }
                    t = h[i][nu].abs();
                    if (EPS * t) * t > 1.0 {
                        for row in h.iter_mut().take(nu + 1).skip(i) {
                            row[nu] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            let mut l = nu - 1;
            if h[nu][nu - 1].abs() > h[nu - 1][nu].abs() {
                h[nu - 1][nu - 1] = q / h[nu][nu - 1];
                h[nu - 1][nu] = -(h[nu][nu] - p) / h[nu][nu - 1];
            } else {
                let (cr, ci) = cdiv(0.0, -h[nu - 1][nu], h[nu - 1][nu - 1] - p, q);
                h[nu - 1][nu - 1] = cr;
                h[nu - 1][nu] = ci;
            }
            h[nu][nu - 1] = 0.0;
            h[nu][nu] = 1.0;
            for i in (0..nu.saturating_sub(1)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=nu {
                    ra += h[i][j] * h[j][nu - 1];
                    sa += h[i][j] * h[j][nu];
                }
                w = h[i][i] - p;
                if e[i] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[i][nu - 1] = cr;
                        h[i][nu] = ci;
                    } else {
                        x = h[i][i + 1];
                        y = h[i + 1][i];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = EPS * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[i][nu - 1] = cr;
                        h[i][nu] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[i + 1][nu - 1] = (-ra - w * h[i][nu - 1] + q * h[i][nu]) / x;
                            h[i + 1][nu] = (-sa - w * h[i][nu] - q * h[i][nu - 1]) / x;
                        } else {
                            let (cr, ci) = cdiv(-r - y * h[i][nu - 1], -s - y * h[i][nu], z, q);
                            h[i + 1][nu - 1] = cr;
                            h[i + 1][nu] = ci;
                        }
                    }
                    t = h[i][nu - 1].abs().max(h[i][nu].abs());
                    if (EPS * t) * t > 1.0 {
                        for row in h.iter_mut().take(nu + 1).skip(i) {
                            row[nu - 1] /= t;
                            row[nu] /= t;
                        }
                    }
                }
            }
        }
    }

    // Back-transform to eigenvectors of the original matrix.
    for j in (0..nn).rev() {
        for i in 0..=high {
            z = 0.0;
            for k in 0..=j.min(high) {
                z += v[i][k] * h[k][j];
            }
            v[i][j] = z;
        }
    }
    Ok(())
}
