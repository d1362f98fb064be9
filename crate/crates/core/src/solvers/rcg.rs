use super::{current_as_selection, finish_update, project_start, with_variant, RecycledSolve};
use crate::error::{Error, Result};
use crate::krylov::{check_finite, residual, validate, IdentityCheck, SolveReport, SolverParams, Termination, SPOT_CHECK_SEED};
use crate::recycle::{RecycleSpace, Variant};
use crate::selection::{SelectorSpec, WindowedSelector};
use crate::sparse::{check_positive, LinearOperator};
use crate::vector;

/// Recycled CG. With `U^T A U = I` the projector is `Q = C U^T` and the
/// projected operator `(I - Q) A = A - C C^T` is symmetric positive
/// semidefinite, so plain CG applies to it. The coefficients `U^T A p_j`
/// fall out of the projection and accumulate into the final `U` correction.
///
/// The selector window holds normalized residuals; their images come for
/// free from `A r_j = A p_j - beta_j A p_{j-1}`.
pub fn rcg(
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
    check_positive(op, 2, SPOT_CHECK_SEED)?;
    let rs = with_variant(rs, Variant::Galerkin)?;
    let n = op.dim();
    let k = rs.k();
    let bnorm = vector::norm2(b);
    let target = params.tol * bnorm;
    let mut check = IdentityCheck::new(params.debug_checks, bnorm);

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let r = residual(op, b, &x);
    let mut matvecs = 1;
    let initial_resnorm = vector::norm2(&r);
    check_finite(initial_resnorm, "initial residual")?;
    let r0 = project_start(&rs, &mut x, r);
    let mut r = r0.clone();
    let mut rr = vector::dot(&r, &r);
    let mut resnorms = vec![rr.sqrt()];
    let mut iterates = Vec::new();
    if params.record_iterates {
        iterates.push(x.clone());
    }
    let mut window = selector.is_spectral().then(|| WindowedSelector::new(selector, &rs));

    let mut p = r.clone();
    let mut t = vec![0.0; n];
    let mut acc = vec![0.0; k];
    let mut ap_prev = vec![0.0; n];
    let mut beta_prev = 0.0;
    let mut its = 0;

    let termination = loop {
        if rr.sqrt() <= target {
            break Termination::Tolerance;
        }
        if its >= params.maxit {
            break Termination::MaxIter;
        }
        let ap = op.apply_vec(&p);
        matvecs += 1;
        its += 1;
        if let Some(ws) = window.as_mut() {
            let s = 1.0 / rr.sqrt();
            let mut img = ap.clone();
            vector::axpy(-beta_prev, &ap_prev, &mut img);
            vector::scale(s, &mut img);
            let mut v = r.clone();
            vector::scale(s, &mut v);
            ws.push(v, img)?;
        }
        let (q, coeffs) = rs.apply_q_complement(&ap);
        let pq = vector::dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NotPositiveDefinite { curvature: pq });
        }
        let alpha = rr / pq;
        vector::axpy(alpha, &p, &mut t);
        vector::axpy(alpha, &coeffs, &mut acc);
        vector::axpy(-alpha, &q, &mut r);
        let rr_next = vector::dot(&r, &r);
        check_finite(rr_next, "residual")?;
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        ap_prev = ap;
        beta_prev = beta;
        resnorms.push(rr.sqrt());
        if params.record_iterates || check.enabled {
            let xj = finish_update(&rs, &x, &r0, &t, &acc);
            if check.enabled {
                check.observe(op, b, &xj, rr.sqrt())?;
            }
            if params.record_iterates {
                iterates.push(xj);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::krylov::cg;
    use crate::recycle::prepare_recycle;
    use crate::selection::SelectorKind;
    use crate::sparse::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> SolverParams {
        SolverParams {
            restart: 50,
            tol: 1e-12,
            maxit: 2000,
            record_iterates: false,
            debug_checks: true,
        }
    }

    fn laplacian(m: usize) -> CsrMatrix {
        let n = m * m;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let p = i * m + j;
                t.push((p, p, 4.0));
                if i > 0 {
                    t.push((p, p - m, -1.0));
                }
                if i + 1 < m {
                    t.push((p, p + m, -1.0));
                }
                if j > 0 {
                    t.push((p, p - 1, -1.0));
                }
                if j + 1 < m {
                    t.push((p, p + 1, -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn empty_space_reproduces_cg() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 40;
        let r = DenseMatrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let mut a = r.matmul(&r.transpose());
        for i in 0..n {
            a[(i, i)] += 0.5;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = cg(&a, &b, None, &params()).unwrap();
        let rs = RecycleSpace::empty(n, Variant::Orthogonal);
        let rc = rcg(&a, &b, None, &rs, &params(), &SelectorSpec::none()).unwrap().report;
        assert_eq!(c.resnorms.len(), rc.resnorms.len());
        for (u, v) in c.resnorms.iter().zip(&rc.resnorms) {
            assert!((u - v).abs() <= 1e-10);
        }
    }

    #[test]
    fn deflating_the_largest_eigenvalue() {
        let a = CsrMatrix::from_diag(&[1.0, 2.0, 100.0]).unwrap();
        let u = DenseMatrix::from_columns(3, &[vec![0.0, 0.0, 1.0]]);
        let rs = prepare_recycle(&a, &u, Variant::Orthogonal).unwrap();
        let rep = rcg(&a, &[1.0; 3], None, &rs, &params(), &SelectorSpec::none()).unwrap().report;
        assert!(rep.converged && rep.iterations <= 2);
        assert!((rep.x[2] - 0.01).abs() < 1e-14);
    }

    #[test]
    fn ritz_vectors_from_a_prior_solve_cut_iterations() {
        let a = laplacian(30);
        let n = 900;
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let mut p = params();
        p.tol = 1e-8;
        let spec = SelectorSpec::new(SelectorKind::Ritz, 5);
        let first = rcg(&a, &b, None, &RecycleSpace::empty(n, Variant::Galerkin), &p, &spec).unwrap();
        let sel = first.next.unwrap();
        assert_eq!(sel.k(), 5);
        let rs = prepare_recycle(&a, &sel.u, Variant::Galerkin).unwrap();
        let b2: Vec<f64> = (0..n).map(|i| ((i * 5 % 11) as f64 - 5.0) / 5.0).collect();
        let plain = cg(&a, &b2, None, &p).unwrap();
        let rec = rcg(&a, &b2, None, &rs, &p, &SelectorSpec::none()).unwrap().report;
        assert!(rec.converged);
        assert!(rec.iterations < plain.iterations, "{} vs {}", rec.iterations, plain.iterations);
    }
}
