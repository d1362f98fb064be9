mod common;

use common::{augmented, krylov_basis, nonsymmetric, random_matrix, rng, spd, symmetric, unit_vector};
use proptest::prelude::*;
use recyklos::dense::{thin_qr, DenseMatrix, DEFAULT_RANK_TOL};
use recyklos::krylov::{cg, fom, gmres, minres, ArnoldiState, SolverParams};
use recyklos::oracle::{bruteforce_min_residual, subspace_angles};
use recyklos::recycle::{prepare_recycle, ProjectedOperator, RecycleSpace, Variant};
use recyklos::selection::{SelectorKind, SelectorSpec};
use recyklos::solvers::{rcg, rfom, rgmres_gcrodr, rminres};
use recyklos::sparse::{CsrMatrix, LinearOperator};
use recyklos::vector::{norm2, sub};

fn params(maxit: usize, tol: f64) -> SolverParams {
    SolverParams {
        restart: maxit,
        tol,
        maxit,
        record_iterates: false,
        debug_checks: true,
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "histories differ in length");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn image_basis(a: &dyn LinearOperator, u: &DenseMatrix) -> DenseMatrix {
    let au: Vec<Vec<f64>> = u.columns().iter().map(|c| a.apply_vec(c)).collect();
    thin_qr(&DenseMatrix::from_columns(a.dim(), &au), DEFAULT_RANK_TOL).unwrap().q
}

fn complement(c: &DenseMatrix, w: &[f64]) -> Vec<f64> {
    let mut out = w.to_vec();
    for _ in 0..2 {
        let k = c.tr_matvec(&out);
        recyklos::vector::axpy(-1.0, &c.matvec(&k), &mut out);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gmres_is_optimal_at_every_step(seed in any::<u64>(), n in 4usize..=64) {
        let mut r = rng(seed);
        let a = CsrMatrix::from_dense(&nonsymmetric(n, 1.5, &mut r));
        let b = unit_vector(n, &mut r);
        let rep = gmres(&a, &b, None, &params(n, 1e-13)).unwrap();
        let v = krylov_basis(&|x| a.apply_vec(x), &b, rep.iterations);
        let none = DenseMatrix::zeros(n, 0);
        for (j, &res) in rep.resnorms.iter().enumerate().take(v.len() + 1) {
            let (m, _) = bruteforce_min_residual(&a, &b, &vec![0.0; n], &augmented(&none, &v, j)).unwrap();
            prop_assert!((res - m).abs() <= 1e-9, "step {j}: {res} vs {m}");
        }
    }

    #[test]
    fn minres_matches_gmres_on_symmetric(seed in any::<u64>(), n in 4usize..=80) {
        let mut r = rng(seed);
        let a = CsrMatrix::from_dense(&symmetric(n, 0.7, &mut r));
        let b = unit_vector(n, &mut r);
        let p = params(n, 1e-10);
        let g = gmres(&a, &b, None, &p).unwrap();
        let m = minres(&a, &b, None, &p).unwrap();
        let len = g.resnorms.len().min(m.resnorms.len());
        prop_assert!(max_diff(&g.resnorms[..len], &m.resnorms[..len]) <= 1e-8);
    }

    #[test]
    fn fom_iterates_are_cg_iterates(seed in any::<u64>(), n in 4usize..=30) {
        let mut r = rng(seed);
        let a = CsrMatrix::from_dense(&spd(n, &mut r));
        let b = unit_vector(n, &mut r);
        let mut p = params(n, 1e-12);
        p.record_iterates = true;
        let f = fom(&a, &b, None, &p).unwrap();
        let c = cg(&a, &b, None, &p).unwrap();
        prop_assert!(!f.iterates.is_empty() && f.iterates.len() == c.iterates.len());
        for (xf, xc) in f.iterates.iter().zip(&c.iterates) {
            prop_assert!(norm2(&sub(xf, xc)) <= 1e-10);
        }
    }

    #[test]
    fn arnoldi_relation_holds(seed in any::<u64>(), n in 2usize..=40) {
        let mut r = rng(seed);
        let ad = nonsymmetric(n, 0.0, &mut r);
        let a = CsrMatrix::from_dense(&ad);
        let mut arn = ArnoldiState::new(&unit_vector(n, &mut r)).unwrap();
        for _ in 0..n.min(20) {
            if arn.extend(&a) {
                break;
            }
        }
        let j = arn.j();
        let v = DenseMatrix::from_columns(n, arn.basis());
        prop_assert!(v.orthonormality_defect() <= 1e-12);
        let vj = DenseMatrix::from_columns(n, &arn.basis()[..j]);
        let h = arn.hessenberg();
        let lhs = ad.matmul(&vj);
        let rhs = v.matmul(&leading_rows(&h, v.ncols()));
        prop_assert!(lhs.sub(&rhs).frobenius_norm() <= 1e-10 * ad.frobenius_norm());
    }

    #[test]
    fn recycled_solvers_with_k0_reproduce_base(seed in any::<u64>(), n in 8usize..=60) {
        let mut r = rng(seed);
        let b = unit_vector(n, &mut r);
        let mut p = params(200, 1e-10);
        p.restart = 12;
        let none = SelectorSpec::none();
        let a = CsrMatrix::from_dense(&nonsymmetric(n, 1.3, &mut r));
        let s = CsrMatrix::from_dense(&symmetric(n, 0.4, &mut r));
        let q = CsrMatrix::from_dense(&spd(n, &mut r));
        let empty = |v| RecycleSpace::empty(n, v);
        let rg = rgmres_gcrodr(&a, &b, None, &empty(Variant::Orthogonal), &p, &none).unwrap().report;
        prop_assert!(max_diff(&gmres(&a, &b, None, &p).unwrap().resnorms, &rg.resnorms) <= 1e-10);
        let rf = rfom(&a, &b, None, &empty(Variant::ObliqueFom), &p).unwrap();
        prop_assert!(max_diff(&fom(&a, &b, None, &p).unwrap().resnorms, &rf.resnorms) <= 1e-10);
        let rm = rminres(&s, &b, None, &empty(Variant::Orthogonal), &p, &none).unwrap().report;
        prop_assert!(max_diff(&minres(&s, &b, None, &p).unwrap().resnorms, &rm.resnorms) <= 1e-10);
        let rc = rcg(&q, &b, None, &empty(Variant::Galerkin), &p, &none).unwrap().report;
        prop_assert!(max_diff(&cg(&q, &b, None, &p).unwrap().resnorms, &rc.resnorms) <= 1e-10);
    }

    #[test]
    fn recycled_minimal_residual_is_optimal(seed in any::<u64>(), n in 10usize..=80, k in 1usize..6) {
        let mut r = rng(seed);
        let b = unit_vector(n, &mut r);
        let u = random_matrix(n, k, &mut r);
        let p = params(20.min(n - k), 1e-13);
        for symmetric_case in [false, true] {
            let ad = if symmetric_case { symmetric(n, 0.5, &mut r) } else { nonsymmetric(n, 1.5, &mut r) };
            let a = CsrMatrix::from_dense(&ad);
            let rs = prepare_recycle(&a, &u, Variant::Orthogonal).unwrap();
            let rep = if symmetric_case {
                rminres(&a, &b, None, &rs, &p, &SelectorSpec::none()).unwrap().report
            } else {
                rgmres_gcrodr(&a, &b, None, &rs, &p, &SelectorSpec::none()).unwrap().report
            };
            let c = image_basis(&a, &u);
            let v = krylov_basis(&|x| complement(&c, &a.apply_vec(x)), &complement(&c, &b), rep.iterations);
            for (j, &res) in rep.resnorms.iter().enumerate().take(v.len() + 1) {
                let (m, _) = bruteforce_min_residual(&a, &b, &vec![0.0; n], &augmented(&u, &v, j)).unwrap();
                prop_assert!((res - m).abs() <= 1e-7, "step {j}: {res} vs {m}");
            }
        }
    }

    #[test]
    fn galerkin_residuals_are_orthogonal(seed in any::<u64>(), n in 10usize..=60, k in 1usize..5) {
        let mut r = rng(seed);
        let b = unit_vector(n, &mut r);
        let u = random_matrix(n, k, &mut r);
        let mut p = params(15.min(n - k), 1e-13);
        p.record_iterates = true;
        let a = CsrMatrix::from_dense(&spd(n, &mut r));
        for variant in [Variant::ObliqueFom, Variant::Galerkin] {
            let rs = prepare_recycle(&a, &u, variant).unwrap();
            let rep = if variant == Variant::Galerkin {
                rcg(&a, &b, None, &rs, &p, &SelectorSpec::none()).unwrap().report
            } else {
                rfom(&a, &b, None, &rs, &p).unwrap()
            };
            let proj = ProjectedOperator { op: &a, space: &rs, shift: 0.0 };
            let (start, _) = rs.apply_q_complement(&b);
            let v = krylov_basis(&|x| proj.apply_vec(x), &start, rep.iterations);
            for (j, x) in rep.iterates.iter().enumerate().take(v.len() + 1) {
                let res = sub(&b, &a.apply_vec(x));
                prop_assert!(norm2(&augmented(&u, &v, j).tr_matvec(&res)) <= 1e-8);
            }
        }
    }

    #[test]
    fn projected_krylov_space_is_shift_invariant(seed in any::<u64>(), k in 1usize..6) {
        let mut r = rng(seed);
        let n = 64;
        let a = CsrMatrix::from_dense(&symmetric(n, 0.0, &mut r));
        let rs = prepare_recycle(&a, &random_matrix(n, k, &mut r), Variant::Orthogonal).unwrap();
        let (v, _) = rs.apply_q_complement(&unit_vector(n, &mut r));
        let base = ProjectedOperator { op: &a, space: &rs, shift: 0.0 };
        let k0 = DenseMatrix::from_columns(n, &krylov_basis(&|x| base.apply_vec(x), &v, 5));
        for gamma in [0.1, 1.0, 10.0] {
            let sh = ProjectedOperator { op: &a, space: &rs, shift: gamma };
            let kg = DenseMatrix::from_columns(n, &krylov_basis(&|x| sh.apply_vec(x), &v, 5));
            let angles = subspace_angles(&k0, &kg).unwrap();
            prop_assert!(angles.iter().all(|&t| t <= 1e-8), "{angles:?}");
        }
    }

    #[test]
    fn gcrodr_cycles_do_not_increase_the_residual(seed in any::<u64>(), n in 30usize..=120) {
        let mut r = rng(seed);
        let a = CsrMatrix::from_dense(&nonsymmetric(n, 1.0, &mut r));
        let b = unit_vector(n, &mut r);
        let mut p = params(300, 1e-10);
        p.restart = 10;
        for kind in [SelectorKind::HarmonicRitz, SelectorKind::Ritz] {
            let rs = RecycleSpace::empty(n, Variant::Orthogonal);
            let rep = rgmres_gcrodr(&a, &b, None, &rs, &p, &SelectorSpec::new(kind, 4)).unwrap().report;
            prop_assert!(rep.resnorms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-15));
            prop_assert!(rep.identity_discrepancy.unwrap() <= 1e-8);
        }
    }
}

/// The first `rows` rows of `h`: all of `H` normally, its square part after
/// a breakdown.
fn leading_rows(h: &DenseMatrix, rows: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows, h.ncols());
    for i in 0..rows {
        for c in 0..h.ncols() {
            out[(i, c)] = h[(i, c)];
        }
    }
    out
}
