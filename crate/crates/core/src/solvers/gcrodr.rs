use super::{current_as_selection, project_start, with_variant, RecycledSolve};
use crate::dense::GivensLstsq;
use crate::error::{Error, Result};
use crate::krylov::{
    check_finite, galerkin_step, residual, validate, ArnoldiState, IdentityCheck, SolveReport, SolverParams,
    Termination,
};
use crate::recycle::{RecycleSpace, Variant};
use crate::selection::{arnoldi_ritz_select, harmonic_ritz_select, SelectorKind, SelectorSpec, Selected};
use crate::sparse::LinearOperator;
use crate::vector;

#[derive(Clone, Copy, PartialEq)]
enum Condition {
    MinimalResidual,
    Galerkin,
}

/// GCRO-DR: restarted GMRES on `(I - Q) A` with the recycle space carried
/// along. `rs` is used as given if it is `ObliqueMr`, otherwise converted to
/// `Orthogonal` (`C^T C = I`). With a spectral selector the space is replaced
/// by harmonic (or plain) Ritz vectors over `[U V_m]` after every cycle; the
/// last selection is returned for the next system.
pub fn rgmres_gcrodr(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    rs: &RecycleSpace,
    params: &SolverParams,
    selector: &SelectorSpec,
) -> Result<RecycledSolve> {
    let variant = match rs.variant() {
        Variant::ObliqueMr => Variant::ObliqueMr,
        _ => Variant::Orthogonal,
    };
    let rs = with_variant(rs, variant)?;
    augmented_arnoldi(op, b, x0, rs, params, selector, Condition::MinimalResidual)
}

/// Recycled FOM: the Galerkin condition over `span(U) + K_j`, with
/// `Q = A U (U^T A U)^{-1} U^T`. Any input space is converted to `ObliqueFom`;
/// an ill-conditioned `U^T A U` loses directions during conversion.
pub fn rfom(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    rs: &RecycleSpace,
    params: &SolverParams,
) -> Result<SolveReport> {
    let rs = with_variant(rs, Variant::ObliqueFom)?;
    augmented_arnoldi(op, b, x0, rs, params, &SelectorSpec::none(), Condition::Galerkin).map(|s| s.report)
}

fn select(rs: &RecycleSpace, arn: &ArnoldiState, bcols: &[Vec<f64>], spec: &SelectorSpec) -> Result<Selected> {
    match spec.kind {
        SelectorKind::Ritz => arnoldi_ritz_select(rs, arn, bcols, spec.k, spec.which),
        _ => harmonic_ritz_select(rs, arn, bcols, spec.k, spec.which),
    }
}

fn augmented_arnoldi(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    mut rs: RecycleSpace,
    params: &SolverParams,
    selector: &SelectorSpec,
    cond: Condition,
) -> Result<RecycledSolve> {
    validate(op, b, x0, params)?;
    selector.validate()?;
    if rs.n() != op.dim() {
        return Err(Error::InvalidInput("recycle space dimension does not match the operator".into()));
    }
    let n = op.dim();
    let bnorm = vector::norm2(b);
    let target = params.tol * bnorm;
    let mut check = IdentityCheck::new(params.debug_checks, bnorm);
    let variant = rs.variant();

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let r = residual(op, b, &x);
    let mut matvecs = 1;
    let initial_resnorm = vector::norm2(&r);
    check_finite(initial_resnorm, "initial residual")?;
    let mut r = project_start(&rs, &mut x, r);
    let mut beta = vector::norm2(&r);
    let mut resnorms = vec![beta];
    let mut iterates = Vec::new();
    if params.record_iterates {
        iterates.push(x.clone());
    }
    let mut its = 0;
    let mut broke_down = false;
    let mut next: Option<Selected> = None;

    let termination = loop {
        if beta <= target {
            break Termination::Tolerance;
        }
        if broke_down {
            break Termination::Breakdown;
        }
        if its >= params.maxit {
            break Termination::MaxIter;
        }
        let mut arn = ArnoldiState::new(&r)?;
        let mut ls = GivensLstsq::new(beta);
        let mut bcols: Vec<Vec<f64>> = Vec::new();
        let mut y_best: Vec<f64> = Vec::new();
        let mut res = beta;
        while arn.j() < params.restart && its < params.maxit {
            let av = op.apply_vec(arn.last());
            matvecs += 1;
            its += 1;
            let (w, coeffs) = rs.apply_q_complement(&av);
            bcols.push(coeffs);
            broke_down = arn.push(w);
            let j = arn.j();
            res = match cond {
                Condition::MinimalResidual => ls.push_column(arn.h_column(j - 1), 0.0),
                Condition::Galerkin => match galerkin_step(&arn, beta) {
                    Some((y, rj)) => {
                        y_best = y;
                        rj
                    }
                    None => res,
                },
            };
            check_finite(res, "residual estimate")?;
            resnorms.push(res);
            if params.record_iterates || check.enabled {
                let y = match cond {
                    Condition::MinimalResidual => ls.solve(),
                    Condition::Galerkin => y_best.clone(),
                };
                let xj = rs.assemble_solution(&x, &r, arn.basis(), &y, &bcols);
                if check.enabled {
                    check.observe(op, b, &xj, res)?;
                }
                if params.record_iterates {
                    iterates.push(xj);
                }
            }
            if res <= target || broke_down {
                break;
            }
        }
        let y = match cond {
            Condition::MinimalResidual => ls.solve(),
            Condition::Galerkin => y_best,
        };
        x = rs.assemble_solution(&x, &r, arn.basis(), &y, &bcols);

        if selector.is_spectral() {
            match select(&rs, &arn, &bcols, selector) {
                Ok(sel) if sel.k() > 0 => next = Some(sel),
                Ok(_) => {}
                Err(e) => log::warn!("recycle selection failed, keeping the current space: {e}"),
            }
        }

        r = residual(op, b, &x);
        matvecs += 1;
        beta = vector::norm2(&r);
        check_finite(beta, "residual")?;
        *resnorms.last_mut().unwrap() = beta;

        let more = beta > target && !broke_down && its < params.maxit;
        if more {
            if let Some(sel) = &next {
                match RecycleSpace::from_image(&sel.u, &sel.au, variant) {
                    Ok(new) => rs = new,
                    Err(e) => log::warn!("selected recycle space unusable, keeping the current one: {e}"),
                }
                r = project_start(&rs, &mut x, r);
                beta = vector::norm2(&r);
                *resnorms.last_mut().unwrap() = beta;
            }
        }
    };

    if next.is_none() && selector.is_spectral() {
        next = current_as_selection(&rs);
    }
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
