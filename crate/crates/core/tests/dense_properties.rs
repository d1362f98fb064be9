mod common;

use common::{random_matrix, random_vector, rng, spd};
use proptest::prelude::*;
use rand::Rng;
use recyklos::dense::{
    generalized_eig_small, hessenberg_lstsq, small_eig_general, svd_small, sym_eig, DenseMatrix, EigenValue,
};
use recyklos::sparse::{read_matrix_market, write_matrix_market, CsrMatrix};
use recyklos::vector::{norm2, sub};

fn hessenberg(m: usize, rng: &mut rand_chacha::ChaCha8Rng) -> DenseMatrix {
    let mut h = random_matrix(m + 1, m, rng);
    for c in 0..m {
        for r in c + 2..=m {
            h[(r, c)] = 0.0;
        }
        // keep the subdiagonal away from zero
        h[(c + 1, c)] = h[(c + 1, c)].signum() * (0.5 + h[(c + 1, c)].abs());
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hessenberg_lstsq_is_locally_optimal(seed in any::<u64>(), m in 1usize..12) {
        let mut r = rng(seed);
        let h = hessenberg(m, &mut r);
        let rhs = random_vector(m + 1, &mut r);
        let (y, res) = hessenberg_lstsq(&h, &rhs).unwrap();
        for _ in 0..100 {
            let y2: Vec<f64> = y.iter().map(|v| v + 1e-3 * r.gen_range(-1.0..1.0)).collect();
            prop_assert!(res <= norm2(&sub(&h.matvec(&y2), &rhs)) + 1e-14);
        }
        // normal equations H^T H y = H^T rhs, solved by Gaussian elimination here
        let mut g = h.tr_matmul(&h);
        let mut t = h.tr_matvec(&rhs);
        for c in 0..m {
            let p = (c..m).max_by(|&a, &b| g[(a, c)].abs().total_cmp(&g[(b, c)].abs())).unwrap();
            for k in 0..m {
                let tmp = g[(c, k)];
                g[(c, k)] = g[(p, k)];
                g[(p, k)] = tmp;
            }
            t.swap(c, p);
            for rr in c + 1..m {
                let f = g[(rr, c)] / g[(c, c)];
                for k in c..m {
                    g[(rr, k)] -= f * g[(c, k)];
                }
                t[rr] -= f * t[c];
            }
        }
        let mut yn = vec![0.0; m];
        for c in (0..m).rev() {
            let s: f64 = (c + 1..m).map(|k| g[(c, k)] * yn[k]).sum();
            yn[c] = (t[c] - s) / g[(c, c)];
        }
        let scale = norm2(&yn).max(1.0);
        prop_assert!(norm2(&sub(&y, &yn)) <= 1e-10 * scale);
    }

    #[test]
    fn symmetric_eigenpairs_satisfy_residual_bound(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let m = random_matrix(n, n, &mut r);
        let a = m.sub(&m.transpose().scaled(-1.0));
        let (vals, vecs) = sym_eig(&a).unwrap();
        let norm = a.frobenius_norm().max(f64::MIN_POSITIVE);
        prop_assert!(vecs.orthonormality_defect() <= 1e-12);
        for (i, &l) in vals.iter().enumerate() {
            let v = vecs.column(i);
            let mut av = a.matvec(&v);
            recyklos::vector::axpy(-l, &v, &mut av);
            prop_assert!(norm2(&av) <= 1e-10 * norm);
        }
    }

    #[test]
    fn general_eigenpairs_satisfy_residual_bound(seed in any::<u64>(), n in 1usize..16) {
        let mut r = rng(seed);
        let a = random_matrix(n, n, &mut r);
        let norm = a.frobenius_norm();
        for pair in small_eig_general(&a).unwrap() {
            match pair.value {
                EigenValue::Real(l) => {
                    let v = pair.vectors.column(0);
                    let mut av = a.matvec(&v);
                    recyklos::vector::axpy(-l, &v, &mut av);
                    prop_assert!(norm2(&av) <= 1e-8 * norm * norm2(&v));
                }
                EigenValue::Pair { re, im } => {
                    // M p = re p - im q, M q = im p + re q
                    let x = pair.vectors.column(0);
                    let y = pair.vectors.column(1);
                    let (ax, ay) = (a.matvec(&x), a.matvec(&y));
                    let rx: Vec<f64> = (0..n).map(|i| ax[i] - re * x[i] + im * y[i]).collect();
                    let ry: Vec<f64> = (0..n).map(|i| ay[i] - im * x[i] - re * y[i]).collect();
                    let scale = (norm2(&x) + norm2(&y)) * norm;
                    prop_assert!(norm2(&rx) + norm2(&ry) <= 1e-8 * scale);
                }
            }
        }
    }

    #[test]
    fn generalized_eigenpairs_satisfy_residual_bound(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let a = random_matrix(n, n, &mut r);
        let b = spd(n, &mut r);
        let scale = a.frobenius_norm() + b.frobenius_norm();
        for pair in generalized_eig_small(&a, &b).unwrap() {
            if let EigenValue::Real(l) = pair.value {
                let v = pair.vectors.column(0);
                let res = sub(&a.matvec(&v), &b.matvec(&v).iter().map(|x| l * x).collect::<Vec<_>>());
                prop_assert!(norm2(&res) <= 1e-8 * scale * (1.0 + l.abs()) * norm2(&v));
            }
        }
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), n in 1usize..40, k in 1usize..12) {
        let mut r = rng(seed);
        let m = random_matrix(n, k, &mut r);
        let s = svd_small(&m).unwrap();
        let mut us = s.left.clone();
        for c in 0..us.ncols() {
            for i in 0..n {
                us[(i, c)] *= s.sing[c];
            }
        }
        let back = us.matmul(&s.right.transpose());
        prop_assert!(back.sub(&m).frobenius_norm() <= 1e-12 * m.frobenius_norm().max(1.0));
        prop_assert!(s.sing.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn matrix_market_roundtrip_is_exact(seed in any::<u64>(), n in 1usize..30, m in 1usize..30) {
        let mut r = rng(seed);
        let t: Vec<(usize, usize, f64)> = (0..(n * m / 3).max(1))
            .map(|_| (r.gen_range(0..n), r.gen_range(0..m), r.gen_range(-1e3..1e3)))
            .collect();
        let a = CsrMatrix::from_triplets(n, m, t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.mtx");
        write_matrix_market(&p, &a).unwrap();
        let b = read_matrix_market(&p).unwrap();
        write_matrix_market(&p, &b).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(read_matrix_market(&p).unwrap(), b);
    }
}
