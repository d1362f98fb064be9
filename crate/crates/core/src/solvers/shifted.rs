//! Families `(A + gamma I) x = b` sharing one projected Lanczos basis.
//!
//! For orthonormal `C` the spaces `K_j((I - Q) A, v)` and
//! `K_j((I - Q)(A + gamma I), v)` coincide when `v ⊥ range(C)`, so a single
//! basis `V_{m+1}` with `(I - Q) A V_m = V_{m+1} T` and `C^T A V_m = B` serves
//! every shift. Writing `x = V_m y + U z`:
//!
//! ```text
//! b - (A + gamma I) x = V_{m+1} (xi e1 - (T + gamma I) y)
//!                     + C (C^T b - B y - (I + gamma C^T U) z)
//!                     - gamma (I - C C^T) U z
//! ```
//!
//! The right form drops the last term and solves the block upper-triangular
//! problem blockwise; it is exact when `U` is invariant (`(I - C C^T) U = 0`).
//! The left form keeps it, expanding `(I - C C^T) U` in `V_{m+1}` and an
//! orthonormal complement `N`, and solves the full small least-squares problem.

use super::with_variant;
use crate::dense::{back_substitute, svd_small, thin_qr, DenseMatrix, GivensLstsq, LuFactor, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::krylov::{check_finite, validate, LanczosState, SolveReport, SolverParams, Termination, SPOT_CHECK_SEED};
use crate::recycle::{RecycleSpace, Variant};
use crate::sparse::{check_symmetric, LinearOperator};
use crate::vector;

/// Least-squares problems with a larger condition estimate fail for that
/// shift only.
const LS_COND_LIMIT: f64 = 1e12;

pub struct ShiftedFamily<'a> {
    op: &'a dyn LinearOperator,
    b: Vec<f64>,
    shifts: Vec<f64>,
}

impl<'a> ShiftedFamily<'a> {
    /// Shifts must be finite, distinct, and include `0`.
    pub fn new(op: &'a dyn LinearOperator, b: Vec<f64>, shifts: Vec<f64>) -> Result<Self> {
        if b.len() != op.dim() {
            return Err(Error::InvalidInput("rhs length does not match the operator".into()));
        }
        if shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("shifts must be finite".into()));
        }
        for (i, s) in shifts.iter().enumerate() {
            if shifts[..i].contains(s) {
                return Err(Error::InvalidInput(format!("duplicate shift {s}")));
            }
        }
        if !shifts.contains(&0.0) {
            return Err(Error::InvalidInput("the unshifted system (shift 0) must be part of the family".into()));
        }
        Ok(Self { op, b, shifts })
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftedForm {
    #[default]
    Right,
    Left,
}

#[derive(Debug, Clone)]
pub struct ShiftReport {
    pub shift: f64,
    /// `resnorms` holds the least-squares residual of the shifted tridiagonal
    /// problem after each Lanczos step (the full problem's, for the left form,
    /// once those meet the tolerance); the final entry is the true residual.
    pub report: SolveReport,
    /// 2-norm condition estimate of the small least-squares matrix.
    pub ls_condition: f64,
}

/// Solves every member of the family from `x0 = 0`. The basis grows until all
/// shifts meet `tol` (by their least-squares residual), `min(restart, maxit)`
/// steps, or breakdown. In the left form a rise of the full least-squares
/// residual (lost orthogonality) also ends the run, without the offending
/// step. Per-shift failures do not affect the other shifts.
pub fn solve_shifted_family(
    fam: &ShiftedFamily<'_>,
    rs: &RecycleSpace,
    params: &SolverParams,
    form: ShiftedForm,
) -> Result<Vec<Result<ShiftReport>>> {
    let op = fam.op;
    let b = &fam.b;
    validate(op, b, None, params)?;
    if rs.n() != op.dim() {
        return Err(Error::InvalidInput("recycle space dimension does not match the operator".into()));
    }
    check_symmetric(op, 2, SPOT_CHECK_SEED)?;
    let rs = with_variant(rs, Variant::Orthogonal)?;
    let n = op.dim();
    let k = rs.k();
    let bnorm = vector::norm2(b);
    let target = params.tol * bnorm;
    // range(C)^perp has dimension n - k; more steps only add rounding
    let steps = params.restart.min(params.maxit).min(n - k);

    let ctb = rs.q_coefficients(b);
    let (start, _) = rs.apply_q_complement(b);
    let xi = vector::norm2(&start);
    check_finite(xi, "projected rhs")?;

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut bcols: Vec<Vec<f64>> = Vec::new();
    let mut lss: Vec<GivensLstsq> = fam.shifts.iter().map(|_| GivensLstsq::new(xi)).collect();
    let mut hist: Vec<Vec<f64>> = fam.shifts.iter().map(|_| vec![xi]).collect();
    let mut matvecs = 0;
    let mut broke_down = false;
    let mut lanczos = None;
    let mut next_vector: Option<Vec<f64>> = None;
    let mut stagnated = false;
    let mut prev_full: Option<Vec<f64>> = None;

    if xi > target {
        let mut lz = LanczosState::new(&start)?;
        while basis.len() < steps {
            let v = lz.current().to_vec();
            let av = op.apply_vec(&v);
            matvecs += 1;
            let (w, coeffs) = rs.apply_q_complement(&av);
            bcols.push(coeffs);
            basis.push(v);
            let step = lz.push(w);
            let j = basis.len() - 1;
            let mut all_done = true;
            for (l, &gamma) in fam.shifts.iter().enumerate() {
                let mut col = vec![0.0; j + 2];
                if j > 0 {
                    col[j - 1] = lz.offdiag[j - 1];
                }
                col[j] = lz.diag[j] + gamma;
                col[j + 1] = step.beta_next;
                let res = lss[l].push_column(&col, 0.0);
                check_finite(res, "residual estimate")?;
                hist[l].push(res);
                all_done &= res <= target;
            }
            if step.breakdown {
                broke_down = true;
                break;
            }
            if all_done && form == ShiftedForm::Left && k > 0 {
                // the estimates above ignore the coupling through (I - CC^T) U;
                // confirm against the full problem before stopping
                let ld = LeftData::new(&rs, &basis, Some(lz.current()))?;
                let ctu: Vec<Vec<f64>> = rs.u().iter().map(|u| rs.q_coefficients(u)).collect();
                let full: Vec<f64> = fam
                    .shifts
                    .iter()
                    .map(|&gamma| {
                        let tri = tridiag(&lz.diag, &lz.offdiag, basis.len(), gamma);
                        ld.solve(&ctu, &ctb, &bcols, &tri, xi, gamma).map_or(f64::INFINITY, |s| s.3)
                    })
                    .collect();
                all_done = full.iter().all(|&r| r <= target);
                // the minimization is over nested spaces, so a rise in every
                // unfinished shift means the basis has lost orthogonality
                let stalled = prev_full
                    .as_ref()
                    .is_some_and(|p: &Vec<f64>| full.iter().zip(p).all(|(&c, &p)| c <= target || c >= p));
                if !all_done && stalled {
                    stagnated = true;
                    break;
                }
                for (h, &r) in hist.iter_mut().zip(&full) {
                    *h.last_mut().unwrap() = r;
                }
                prev_full = Some(full);
            }
            if all_done {
                break;
            }
        }
        if stagnated {
            // drop the step that made things worse
            next_vector = basis.pop();
            bcols.pop();
            for h in hist.iter_mut() {
                h.pop();
            }
        } else if !broke_down && !basis.is_empty() {
            next_vector = Some(lz.current().to_vec());
        }
        lanczos = Some(lz);
    }
    let m = basis.len();
    let (mut diag, mut offdiag) = lanczos.map_or((Vec::new(), Vec::new()), |lz| (lz.diag, lz.offdiag));
    diag.truncate(m);
    offdiag.truncate(m);

    // the pieces the left form needs, shared across shifts
    let left = if form == ShiftedForm::Left && k > 0 {
        Some(LeftData::new(&rs, &basis, next_vector.as_deref())?)
    } else {
        None
    };
    // C^T U
    let ctu: Vec<Vec<f64>> = rs.u().iter().map(|u| rs.q_coefficients(u)).collect();

    let reports = fam
        .shifts
        .iter()
        .enumerate()
        .map(|(l, &gamma)| {
            let tri = tridiag(&diag, &offdiag, m, gamma);
            let (y, z, cond) = match &left {
                None => right_form(&rs, &ctu, &ctb, &bcols, &tri, &lss[l], gamma)?,
                Some(ld) => {
                    let (y, z, cond, _) = ld.solve(&ctu, &ctb, &bcols, &tri, xi, gamma)?;
                    (y, z, cond)
                }
            };
            let mut x = vector::combine(&basis, &y, n);
            if k > 0 {
                vector::axpy(1.0, &vector::combine(rs.u(), &z, n), &mut x);
            }
            let mut r = op.apply_vec(&x);
            vector::axpy(gamma, &x, &mut r);
            let r = vector::sub(b, &r);
            let true_res = vector::norm2(&r);
            check_finite(true_res, "residual")?;
            let mut resnorms = hist[l].clone();
            let ls_res = *resnorms.last().unwrap();
            *resnorms.last_mut().unwrap() = true_res;
            let converged = true_res <= target;
            let termination = if converged {
                Termination::Tolerance
            } else if broke_down || stagnated {
                Termination::Breakdown
            } else {
                Termination::MaxIter
            };
            Ok(ShiftReport {
                shift: gamma,
                report: SolveReport {
                    x,
                    resnorms,
                    initial_resnorm: bnorm,
                    matvecs: matvecs + 1,
                    iterations: m,
                    converged,
                    termination,
                    iterates: Vec::new(),
                    identity_discrepancy: params.debug_checks.then_some((true_res - ls_res).abs()),
                },
                ls_condition: cond,
            })
        })
        .collect();
    Ok(reports)
}

/// `T + gamma I` as a dense `(m+1) x m` matrix.
fn tridiag(diag: &[f64], offdiag: &[f64], m: usize, gamma: f64) -> DenseMatrix {
    let mut t = DenseMatrix::zeros(m + 1, m);
    for j in 0..m {
        t[(j, j)] = diag[j] + gamma;
        t[(j + 1, j)] = offdiag[j];
        if j + 1 < m {
            t[(j, j + 1)] = offdiag[j];
        }
    }
    t
}

fn condition(m: &DenseMatrix) -> Result<f64> {
    if m.ncols() == 0 {
        return Ok(1.0);
    }
    let s = svd_small(m)?.sing;
    let smin = *s.last().unwrap();
    Ok(if smin > 0.0 { s[0] / smin } else { f64::INFINITY })
}

fn ill_conditioned(gamma: f64, cond: f64) -> Error {
    Error::ConvergenceFailure(format!(
        "least-squares problem for shift {gamma} is ill-conditioned (cond {cond:.2e})"
    ))
}

/// Blockwise solve: `y` from the shifted tridiagonal problem, then
/// `z = (I + gamma C^T U)^{-1} (C^T b - B y)`.
fn right_form(
    rs: &RecycleSpace,
    ctu: &[Vec<f64>],
    ctb: &[f64],
    bcols: &[Vec<f64>],
    tri: &DenseMatrix,
    ls: &GivensLstsq,
    gamma: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let k = rs.k();
    let m = tri.ncols();
    let mut mg = DenseMatrix::identity(k);
    for (c, col) in ctu.iter().enumerate() {
        for r in 0..k {
            mg[(r, c)] += gamma * col[r];
        }
    }
    let mut full = DenseMatrix::zeros(k + m + 1, k + m);
    for r in 0..k {
        for c in 0..k {
            full[(r, c)] = mg[(r, c)];
        }
        for (c, bc) in bcols.iter().enumerate() {
            full[(r, k + c)] = bc[r];
        }
    }
    for r in 0..=m {
        for c in 0..m {
            full[(k + r, k + c)] = tri[(r, c)];
        }
    }
    let cond = condition(&full)?;
    if !(cond <= LS_COND_LIMIT) {
        return Err(ill_conditioned(gamma, cond));
    }
    let y = if m > 0 { ls.solve() } else { Vec::new() };
    let z = if k > 0 {
        let mut rhs = ctb.to_vec();
        for (bc, &yl) in bcols.iter().zip(&y) {
            vector::axpy(-yl, bc, &mut rhs);
        }
        LuFactor::new(&mg).map_err(|_| ill_conditioned(gamma, f64::INFINITY))?.solve(&rhs)
    } else {
        Vec::new()
    };
    Ok((y, z, cond))
}

/// Coefficients of `U` in `[C V_{m+1} N]`, with `N` an orthonormal basis of
/// what `C` and `V_{m+1}` miss.
struct LeftData {
    vtu: DenseMatrix,
    rn: DenseMatrix,
    vrows: usize,
}

impl LeftData {
    fn new(rs: &RecycleSpace, basis: &[Vec<f64>], next: Option<&[f64]>) -> Result<Self> {
        let n = rs.n();
        let k = rs.k();
        let mut v: Vec<Vec<f64>> = basis.to_vec();
        if let Some(nv) = next {
            v.push(nv.to_vec());
        }
        let vrows = v.len();
        let mut vtu = DenseMatrix::zeros(vrows, k);
        let mut rest: Vec<Vec<f64>> = Vec::with_capacity(k);
        for (c, u) in rs.u().iter().enumerate() {
            let mut w = u.clone();
            // two passes against [V C]
            for _ in 0..2 {
                for (r, vr) in v.iter().enumerate() {
                    let h = vector::dot(vr, &w);
                    vtu[(r, c)] += h;
                    vector::axpy(-h, vr, &mut w);
                }
                for cc in rs.c() {
                    let h = vector::dot(cc, &w);
                    vector::axpy(-h, cc, &mut w);
                }
            }
            rest.push(w);
        }
        let rm = DenseMatrix::from_columns(n, &rest);
        let scale = rs.u().iter().map(|u| vector::norm2(u)).fold(0.0, f64::max);
        let rn = if rm.max_abs() <= 1e-14 * scale {
            DenseMatrix::zeros(0, k)
        } else {
            let qr = thin_qr(&rm, DEFAULT_RANK_TOL)?;
            qr.r
        };
        Ok(Self { vtu, rn, vrows })
    }

    fn solve(
        &self,
        ctu: &[Vec<f64>],
        ctb: &[f64],
        bcols: &[Vec<f64>],
        tri: &DenseMatrix,
        xi: f64,
        gamma: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
        let k = ctu.len();
        let m = tri.ncols();
        let nr = self.rn.nrows();
        // rows: C (k), V_{m+1} (vrows), N (nr); columns: z (k), y (m)
        let rows = k + self.vrows + nr;
        let mut g = DenseMatrix::zeros(rows, k + m);
        let mut rhs = vec![0.0; rows];
        rhs[..k].copy_from_slice(ctb);
        if self.vrows > 0 {
            rhs[k] = xi;
        }
        for c in 0..k {
            for r in 0..k {
                g[(r, c)] = f64::from(u8::from(r == c)) + gamma * ctu[c][r];
            }
            for r in 0..self.vrows {
                g[(k + r, c)] = gamma * self.vtu[(r, c)];
            }
            for r in 0..nr {
                g[(k + self.vrows + r, c)] = gamma * self.rn[(r, c)];
            }
        }
        for (c, bc) in bcols.iter().enumerate() {
            for r in 0..k {
                g[(r, k + c)] = bc[r];
            }
            for r in 0..tri.nrows().min(self.vrows) {
                g[(k + r, k + c)] = tri[(r, c)];
            }
        }
        let cond = condition(&g)?;
        if !(cond <= LS_COND_LIMIT) {
            return Err(ill_conditioned(gamma, cond));
        }
        let qr = thin_qr(&g, DEFAULT_RANK_TOL)?;
        if qr.rank < k + m {
            return Err(ill_conditioned(gamma, f64::INFINITY));
        }
        let sol = back_substitute(&qr.r, &qr.q.tr_matvec(&rhs));
        let res = vector::norm2(&vector::sub(&rhs, &g.matvec(&sol)));
        Ok((sol[k..].to_vec(), sol[..k].to_vec(), cond, res))
    }
}
