use super::{
    check_finite, residual, validate, IdentityCheck, SolveReport, SolverParams, Termination, SPOT_CHECK_SEED,
};
use crate::error::{Error, Result};
use crate::sparse::{check_positive, LinearOperator};
use crate::vector;

/// Conjugate gradients for symmetric positive definite operators.
pub fn cg(op: &dyn LinearOperator, b: &[f64], x0: Option<&[f64]>, params: &SolverParams) -> Result<SolveReport> {
    validate(op, b, x0, params)?;
    check_positive(op, 2, SPOT_CHECK_SEED)?;
    let n = op.dim();
    let bnorm = vector::norm2(b);
    let target = params.tol * bnorm;
    let mut check = IdentityCheck::new(params.debug_checks, bnorm);

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = residual(op, b, &x);
    let mut matvecs = 1;
    let mut rr = vector::dot(&r, &r);
    check_finite(rr, "initial residual")?;
    let initial_resnorm = rr.sqrt();
    let mut resnorms = vec![initial_resnorm];
    let mut iterates = Vec::new();
    if params.record_iterates {
        iterates.push(x.clone());
    }
    let mut p = r.clone();
    let mut q = vec![0.0; n];
    let mut its = 0;

    let termination = loop {
        if rr.sqrt() <= target {
            break Termination::Tolerance;
        }
        if its >= params.maxit {
            break Termination::MaxIter;
        }
        op.apply(&p, &mut q);
        matvecs += 1;
        its += 1;
        let pq = vector::dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NotPositiveDefinite { curvature: pq });
        }
        let alpha = rr / pq;
        vector::axpy(alpha, &p, &mut x);
        vector::axpy(-alpha, &q, &mut r);
        let rr_next = vector::dot(&r, &r);
        check_finite(rr_next, "residual")?;
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        resnorms.push(rr.sqrt());
        if check.enabled {
            check.observe(op, b, &x, rr.sqrt())?;
        }
        if params.record_iterates {
            iterates.push(x.clone());
        }
    };

    Ok(SolveReport {
        x,
        converged: termination == Termination::Tolerance,
        resnorms,
        initial_resnorm,
        matvecs,
        iterations: its,
        termination,
        iterates,
        identity_discrepancy: check.result(),
    })
}
