use super::{current_as_selection, finish_update, project_start, with_variant, RecycledSolve};
use crate::error::{Error, Result};
use crate::krylov::{
    check_finite, residual, validate, IdentityCheck, LanczosState, MinresRecurrence, SolveReport, SolverParams,
    Termination, WRecurrence, SPOT_CHECK_SEED,
};
use crate::recycle::{RecycleSpace, Variant};
use crate::selection::{SelectorSpec, WindowedSelector};
use crate::sparse::{check_symmetric, LinearOperator};
use crate::vector;

/// Recycled MINRES. Lanczos runs on `(I - C C^T) A`, which is symmetric on
/// `range(C)^⊥` where the basis lives. The `U` correction is postponed: the
/// coefficient columns `b_j = C^T A v_j` go through the same change of basis
/// as the Lanczos vectors, so only `B_j R_j^{-1}` applied to the running
/// coordinates is stored (a `k`-vector).
///
/// With a spectral selector the last `p` Lanczos vectors and their images are
/// kept and folded into Ritz vectors each time the window fills.
pub fn rminres(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    rs: &RecycleSpace,
    params: &SolverParams,
    selector: &SelectorSpec,
) -> Result<RecycledSolve> {
    validate(op, b, x0, params)?;
    selector.validate()?;
    if rs.n() != op.dim() {
        return Err(Error::InvalidInput("recycle space dimension does not match the operator".into()));
    }
    check_symmetric(op, 2, SPOT_CHECK_SEED)?;
    let rs = with_variant(rs, Variant::Orthogonal)?;
    let n = op.dim();
    let k = rs.k();
    let bnorm = vector::norm2(b);
    let target = params.tol * bnorm;
    let mut check = IdentityCheck::new(params.debug_checks, bnorm);

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let r = residual(op, b, &x);
    let matvecs_setup = 1;
    let initial_resnorm = vector::norm2(&r);
    check_finite(initial_resnorm, "initial residual")?;
    let r0 = project_start(&rs, &mut x, r);
    let beta1 = vector::norm2(&r0);
    let mut resnorms = vec![beta1];
    let mut iterates = Vec::new();
    if params.record_iterates {
        iterates.push(x.clone());
    }
    let mut window = selector.is_spectral().then(|| WindowedSelector::new(selector, &rs));
    let mut matvecs = matvecs_setup;
    let mut its = 0;
    let mut t = vec![0.0; n];
    let mut acc = vec![0.0; k];

    let termination = if beta1 <= target {
        Termination::Tolerance
    } else {
        let mut lanczos = LanczosState::new(&r0)?;
        let mut rec = MinresRecurrence::new(beta1);
        let mut dirs = WRecurrence::new(n);
        let mut bdirs = WRecurrence::new(k);
        loop {
            if its >= params.maxit {
                break Termination::MaxIter;
            }
            let v = lanczos.current().to_vec();
            let av = op.apply_vec(&v);
            matvecs += 1;
            its += 1;
            let (w, coeffs) = rs.apply_q_complement(&av);
            if let Some(ws) = window.as_mut() {
                ws.push(v.clone(), av)?;
            }
            let step = lanczos.push(w);
            let rot = rec.step(step.alpha, step.beta_next);
            vector::axpy(rot.phi, dirs.next(&v, &rot), &mut t);
            vector::axpy(rot.phi, bdirs.next(&coeffs, &rot), &mut acc);
            let res = rec.residual();
            check_finite(res, "residual estimate")?;
            resnorms.push(res);
            if params.record_iterates || check.enabled {
                let xj = finish_update(&rs, &x, &r0, &t, &acc);
                if check.enabled {
                    check.observe(op, b, &xj, res)?;
                }
                if params.record_iterates {
                    iterates.push(xj);
                }
            }
            if res <= target {
                break Termination::Tolerance;
            }
            if step.breakdown {
                break Termination::Breakdown;
            }
        }
    };
    let x = finish_update(&rs, &x, &r0, &t, &acc);

    let next = match window {
        Some(ws) => ws.finish()?.or_else(|| current_as_selection(&rs)),
        None => None,
    };
    let report = SolveReport {
        x,
        converged: termination == Termination::Tolerance,
        resnorms,
        initial_resnorm,
        matvecs,
        iterations: its,
        termination,
        iterates,
        identity_discrepancy: check.result(),
    };
    Ok(RecycledSolve { report, next })
}
