use super::{check_finite, residual, validate, ArnoldiState, IdentityCheck, SolveReport, SolverParams, Termination};
use crate::dense::{DenseMatrix, GivensLstsq, LuFactor};
use crate::error::Result;
use crate::sparse::LinearOperator;
use crate::vector;

#[derive(Clone, Copy, PartialEq)]
enum Condition {
    MinimalResidual,
    Galerkin,
}

/// Restarted GMRES(m).
pub fn gmres(op: &dyn LinearOperator, b: &[f64], x0: Option<&[f64]>, params: &SolverParams) -> Result<SolveReport> {
    arnoldi_solver(op, b, x0, params, Condition::MinimalResidual)
}

/// Restarted FOM(m): the Galerkin counterpart of GMRES. A step whose square
/// Hessenberg block is singular makes no update and repeats the previous
/// residual norm.
pub fn fom(op: &dyn LinearOperator, b: &[f64], x0: Option<&[f64]>, params: &SolverParams) -> Result<SolveReport> {
    arnoldi_solver(op, b, x0, params, Condition::Galerkin)
}

fn arnoldi_solver(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    params: &SolverParams,
    cond: Condition,
) -> Result<SolveReport> {
    validate(op, b, x0, params)?;
    let n = op.dim();
    let bnorm = vector::norm2(b);
    let target = params.tol * bnorm;
    let mut check = IdentityCheck::new(params.debug_checks, bnorm);

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = residual(op, b, &x);
    let mut matvecs = 1;
    let mut beta = vector::norm2(&r);
    check_finite(beta, "initial residual")?;
    let initial_resnorm = beta;
    let mut resnorms = vec![beta];
    let mut iterates = Vec::new();
    if params.record_iterates {
        iterates.push(x.clone());
    }
    let mut its = 0;
    let mut broke_down = false;

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
        let mut y_best: Vec<f64> = Vec::new();
        let mut res = beta;
        while arn.j() < params.restart && its < params.maxit {
            let w = op.apply_vec(arn.last());
            matvecs += 1;
            its += 1;
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
                let mut xj = x.clone();
                vector::axpy(1.0, &arn.combine(&y), &mut xj);
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
        vector::axpy(1.0, &arn.combine(&y), &mut x);
        r = residual(op, b, &x);
        matvecs += 1;
        beta = vector::norm2(&r);
        check_finite(beta, "residual")?;
        // the recursive estimate is replaced by the true residual at restart
        *resnorms.last_mut().unwrap() = beta;
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

/// Solves `H_j y = beta e1` for the square block; `None` if it is singular.
pub(crate) fn galerkin_step(arn: &ArnoldiState, beta: f64) -> Option<(Vec<f64>, f64)> {
    let j = arn.j();
    let mut hj = DenseMatrix::zeros(j, j);
    for l in 0..j {
        for (i, &v) in arn.h_column(l).iter().enumerate().take(j) {
            hj[(i, l)] = v;
        }
    }
    let lu = LuFactor::new(&hj).ok()?;
    let mut rhs = vec![0.0; j];
    rhs[0] = beta;
    let y = lu.solve(&rhs);
    let res = arn.h_column(j - 1)[j] * y[j - 1].abs();
    Some((y, res.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(m: usize) -> SolverParams {
        SolverParams {
            restart: m,
            tol: 1e-12,
            maxit: 500,
            record_iterates: false,
            debug_checks: true,
        }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = vec![1.0, -2.0, 0.5];
        for solver in [gmres, fom] {
            let rep = solver(&CsrMatrix::identity(3), &b, None, &params(10)).unwrap();
            assert_eq!(rep.iterations, 1);
            assert!(rep.converged);
            for (p, q) in rep.x.iter().zip(&b) {
                assert!((p - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_distinct_eigenvalues() {
        let a = CsrMatrix::from_diag(&[1.0, 2.0]).unwrap();
        for solver in [gmres, fom] {
            let rep = solver(&a, &[1.0, 1.0], None, &params(10)).unwrap();
            assert!(rep.converged && rep.iterations <= 2);
            assert!((rep.x[0] - 1.0).abs() < 1e-12 && (rep.x[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn restarted_gmres_is_monotone_and_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let mut d = DenseMatrix::identity(n).scaled(4.0);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] += rng.gen_range(-1.0..1.0) / (n as f64).sqrt();
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rep = gmres(&d, &b, None, &params(8)).unwrap();
        assert!(rep.converged);
        assert!(rep.resnorms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert_eq!(rep.resnorms.len(), rep.iterations + 1);
        assert!(rep.identity_discrepancy.unwrap() < 1e-8 * vector::norm2(&b));
    }

    #[test]
    fn maxit_is_respected() {
        let a = CsrMatrix::from_diag(&(1..=30).map(f64::from).collect::<Vec<_>>()).unwrap();
        let mut p = params(5);
        p.maxit = 7;
        let rep = gmres(&a, &vec![1.0; 30], None, &p).unwrap();
        assert_eq!(rep.iterations, 7);
        assert_eq!(rep.termination, Termination::MaxIter);
        assert!(!rep.converged);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let rep = gmres(&CsrMatrix::identity(2), &[0.0, 0.0], None, &params(5)).unwrap();
        assert!(rep.converged && rep.iterations == 0 && rep.x == vec![0.0, 0.0]);
    }

    #[test]
    fn fom_skips_singular_galerkin_step() {
        // H_1 = v1' A v1 = 0 for the skew matrix, so the first FOM step is skipped
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let rep = fom(&a, &[1.0, 0.0], None, &params(5)).unwrap();
        assert_eq!(rep.resnorms[1], rep.resnorms[0]);
        assert!(rep.converged);
        assert!(rep.x[0].abs() < 1e-12 && (rep.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let a = CsrMatrix::identity(2);
        assert!(gmres(&a, &[1.0], None, &params(5)).is_err());
        let mut p = params(5);
        p.tol = 0.0;
        assert!(gmres(&a, &[1.0, 1.0], None, &p).is_err());
    }
}
