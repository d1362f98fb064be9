mod common;

use common::{nonsymmetric, random_matrix, rng, spd, unit_vector};
use proptest::prelude::*;
use recyklos::dense::{thin_qr, DenseMatrix, LuFactor, DEFAULT_RANK_TOL};
use recyklos::krylov::ArnoldiState;
use recyklos::recycle::{prepare_recycle, RecycleSpace, Variant};
use recyklos::selection::{
    arnoldi_ritz_select, harmonic_ritz_select, pod_select, previous_solutions_select, ritz_window_select, RitzWindow,
    Which,
};
use recyklos::sparse::{CsrMatrix, LinearOperator};
use recyklos::vector::norm2;

/// Runs `j` projected Arnoldi steps and returns the state plus the `B` columns.
fn projected_arnoldi(a: &CsrMatrix, rs: &RecycleSpace, start: &[f64], j: usize) -> (ArnoldiState, Vec<Vec<f64>>) {
    let (v, _) = rs.apply_q_complement(start);
    let mut arn = ArnoldiState::new(&v).unwrap();
    let mut bcols = Vec::new();
    for _ in 0..j {
        let (w, coeffs) = rs.apply_q_complement(&a.apply_vec(arn.last()));
        bcols.push(coeffs);
        if arn.push(w) {
            break;
        }
    }
    (arn, bcols)
}

fn reconstruction_error(p: &DenseMatrix, s: &DenseMatrix) -> f64 {
    s.sub(&p.matmul(&p.tr_matmul(s))).frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn harmonic_pairs_meet_the_residual_contract(seed in any::<u64>(), k0 in 0usize..4, j in 3usize..12) {
        let mut r = rng(seed);
        let n = 40;
        let a = CsrMatrix::from_dense(&nonsymmetric(n, 0.8, &mut r));
        let rs = if k0 == 0 {
            RecycleSpace::empty(n, Variant::Orthogonal)
        } else {
            prepare_recycle(&a, &random_matrix(n, k0, &mut r), Variant::Orthogonal).unwrap()
        };
        let (arn, bcols) = projected_arnoldi(&a, &rs, &unit_vector(n, &mut r), j);
        let sel = harmonic_ritz_select(&rs, &arn, &bcols, 3, Which::SmallestMagnitude).unwrap();

        let mut space: Vec<Vec<f64>> = rs.u().to_vec();
        space.extend_from_slice(&arn.basis()[..bcols.len()]);
        let images: Vec<Vec<f64>> = space.iter().map(|s| a.apply_vec(s)).collect();
        let pq = thin_qr(&DenseMatrix::from_columns(n, &images), DEFAULT_RANK_TOL).unwrap().q;
        let cols = sel.u.columns();
        let mut i = 0;
        while i < cols.len() {
            let width = if i + 1 < cols.len() && sel.values[i] == sel.values[i + 1] { 2 } else { 1 };
            let y = DenseMatrix::from_columns(n, &cols[i..i + width]);
            let ay = DenseMatrix::from_columns(n, &y.columns().iter().map(|c| a.apply_vec(c)).collect::<Vec<_>>());
            let theta = LuFactor::new(&ay.tr_matmul(&y)).unwrap().solve_matrix(&ay.tr_matmul(&ay));
            let resid = ay.sub(&y.matmul(&theta));
            for c in 0..width {
                let pr = pq.matvec(&pq.tr_matvec(&resid.column(c)));
                prop_assert!(norm2(&pr) <= 1e-6 * norm2(&ay.column(c)));
            }
            i += width;
        }
        // selector output is a usable recycle space
        let next = prepare_recycle(&a, &sel.u, Variant::Orthogonal).unwrap();
        prop_assert_eq!(next.k(), sel.u.ncols());
    }

    #[test]
    fn ritz_and_window_outputs_are_usable(seed in any::<u64>(), p in 4usize..16) {
        let mut r = rng(seed);
        let n = 50;
        let a = CsrMatrix::from_dense(&spd(n, &mut r));
        let rs = RecycleSpace::empty(n, Variant::Orthogonal);
        let (arn, bcols) = projected_arnoldi(&a, &rs, &unit_vector(n, &mut r), p);
        let sel = arnoldi_ritz_select(&rs, &arn, &bcols, 3, Which::LargestMagnitude).unwrap();
        prop_assert_eq!(prepare_recycle(&a, &sel.u, Variant::Galerkin).unwrap().k(), sel.u.ncols());

        let mut window = RitzWindow::new(p);
        for v in &arn.basis()[..bcols.len()] {
            window.push(v.clone(), a.apply_vec(v));
        }
        let sel = ritz_window_select(&window, None, 3, Which::SmallestMagnitude).unwrap();
        prop_assert_eq!(prepare_recycle(&a, &sel.u, Variant::Orthogonal).unwrap().k(), sel.u.ncols());
    }

    #[test]
    fn pod_beats_random_candidates(seed in any::<u64>(), n in 10usize..60, s in 2usize..8, k in 1usize..4) {
        let mut r = rng(seed);
        let snaps = random_matrix(n, s, &mut r);
        let k = k.min(s);
        let p = pod_select(&snaps, k).unwrap();
        prop_assert_eq!(p.ncols(), k);
        let best = reconstruction_error(&p, &snaps);
        for _ in 0..100 {
            let cand = thin_qr(&random_matrix(n, k, &mut r), DEFAULT_RANK_TOL).unwrap().q;
            prop_assert!(best <= reconstruction_error(&cand, &snaps) + 1e-12);
        }
        prop_assert_eq!(prepare_recycle(&CsrMatrix::identity(n), &p, Variant::Orthogonal).unwrap().k(), k);
    }

    #[test]
    fn previous_solutions_are_orthonormal_and_recent(seed in any::<u64>(), h in 1usize..6, k in 1usize..6) {
        let mut r = rng(seed);
        let n = 30;
        let hist: Vec<Vec<f64>> = (0..h).map(|_| unit_vector(n, &mut r)).collect();
        let u = previous_solutions_select(&hist, k).unwrap();
        prop_assert_eq!(u.ncols(), h.min(k));
        prop_assert!(u.orthonormality_defect() <= 1e-12);
        // the most recent solution lies in the span
        let last = hist.last().unwrap();
        let proj = u.matvec(&u.tr_matvec(last));
        prop_assert!(norm2(&recyklos::vector::sub(last, &proj)) <= 1e-12);
    }
}
