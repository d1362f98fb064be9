use super::{
    check_finite, residual, validate, IdentityCheck, LanczosState, MinresRecurrence, SolveReport, SolverParams,
    Termination, WRecurrence, SPOT_CHECK_SEED,
};
use crate::error::Result;
use crate::sparse::{check_symmetric, LinearOperator};
use crate::vector;

/// MINRES for symmetric (possibly indefinite) operators. Keeps O(n) memory:
/// two Lanczos vectors and two direction vectors.
pub fn minres(op: &dyn LinearOperator, b: &[f64], x0: Option<&[f64]>, params: &SolverParams) -> Result<SolveReport> {
    validate(op, b, x0, params)?;
    check_symmetric(op, 2, SPOT_CHECK_SEED)?;
    let n = op.dim();
    let bnorm = vector::norm2(b);
    let target = params.tol * bnorm;
    let mut check = IdentityCheck::new(params.debug_checks, bnorm);

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let r0 = residual(op, b, &x);
    let mut matvecs = 1;
    let beta1 = vector::norm2(&r0);
    check_finite(beta1, "initial residual")?;
    let mut resnorms = vec![beta1];
    let mut iterates = Vec::new();
    if params.record_iterates {
        iterates.push(x.clone());
    }
    let mut its = 0;

    let termination = if beta1 <= target {
        Termination::Tolerance
    } else {
        let mut lanczos = LanczosState::new(&r0)?;
        let mut rec = MinresRecurrence::new(beta1);
        let mut dirs = WRecurrence::new(n);
        loop {
            if its >= params.maxit {
                break Termination::MaxIter;
            }
            let v = lanczos.current().to_vec();
            let w = op.apply_vec(&v);
            matvecs += 1;
            its += 1;
            let step = lanczos.push(w);
            let rot = rec.step(step.alpha, step.beta_next);
            vector::axpy(rot.phi, dirs.next(&v, &rot), &mut x);
            let res = rec.residual();
            check_finite(res, "residual estimate")?;
            resnorms.push(res);
            if check.enabled {
                check.observe(op, b, &x, res)?;
            }
            if params.record_iterates {
                iterates.push(x.clone());
            }
            if res <= target {
                break Termination::Tolerance;
            }
            if step.breakdown {
                break Termination::Breakdown;
            }
        }
    };

    Ok(SolveReport {
        x,
        converged: termination == Termination::Tolerance,
        resnorms,
        initial_resnorm: beta1,
        matvecs,
        iterations: its,
        termination,
        iterates,
        identity_discrepancy: check.result(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::error::Error;
    use crate::krylov::gmres;
    use crate::sparse::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> SolverParams {
        SolverParams {
            restart: 200,
            tol: 1e-10,
            maxit: 400,
            record_iterates: false,
            debug_checks: true,
        }
    }

    #[test]
    fn identity_and_indefinite_diagonal() {
        let rep = minres(&CsrMatrix::identity(4), &[1.0, 2.0, 3.0, 4.0], None, &params()).unwrap();
        assert_eq!(rep.iterations, 1);
        let a = CsrMatrix::from_diag(&[1.0, -1.0]).unwrap();
        let rep = minres(&a, &[1.0, 1.0], None, &params()).unwrap();
        assert!(rep.converged && rep.iterations <= 2);
        assert!((rep.x[0] - 1.0).abs() < 1e-12 && (rep.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_gmres_on_symmetric_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let n = 100;
        let r = DenseMatrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let mut a = r.matmul(&r.transpose()).scaled(1.0 / n as f64);
        for i in 0..n {
            a[(i, i)] += if i % 2 == 0 { 1.0 } else { -1.5 };
        }
        let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nb = vector::norm2(&b);
        vector::scale(1.0 / nb, &mut b);
        let mut p = params();
        p.maxit = 60;
        p.tol = 1e-14;
        let m = minres(&a, &b, None, &p).unwrap();
        p.restart = 100;
        let g = gmres(&a, &b, None, &p).unwrap();
        let k = m.resnorms.len().min(g.resnorms.len()) - 1;
        for i in 0..k {
            assert!((m.resnorms[i] - g.resnorms[i]).abs() < 1e-8, "step {i}");
        }
        assert!(m.resnorms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn nonsymmetric_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(minres(&a, &[1.0, 1.0], None, &params()), Err(Error::NotSymmetric { .. })));
    }
}
