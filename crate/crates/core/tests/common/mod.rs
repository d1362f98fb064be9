#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recyklos::dense::DenseMatrix;
use recyklos::vector::{axpy, dot, norm2};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::new(n, m, (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut b = random_vector(n, rng);
    let s = norm2(&b);
    b.iter_mut().for_each(|x| *x /= s);
    b
}

pub fn nonsymmetric(n: usize, shift: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut a = random_matrix(n, n, rng).scaled(1.0 / (n as f64).sqrt());
    for i in 0..n {
        a[(i, i)] += shift;
    }
    a
}

pub fn symmetric(n: usize, shift: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let r = random_matrix(n, n, rng);
    let mut a = r.sub(&r.transpose().scaled(-1.0)).scaled(1.0 / (8.0 * n as f64).sqrt());
    for i in 0..n {
        a[(i, i)] += shift;
    }
    a
}

pub fn spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let r = random_matrix(n, n, rng);
    let mut a = r.matmul(&r.transpose()).scaled(1.0 / n as f64);
    for i in 0..n {
        a[(i, i)] += 0.5;
    }
    a
}

/// Orthonormal basis of `K_j(op, v)` by Gram-Schmidt with reorthogonalization.
pub fn krylov_basis(op: &dyn Fn(&[f64]) -> Vec<f64>, v: &[f64], j: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(j);
    let mut w = v.to_vec();
    for _ in 0..j {
        let scale = norm2(&w);
        for _ in 0..2 {
            for q in &basis {
                let h = dot(q, &w);
                axpy(-h, q, &mut w);
            }
        }
        let h = norm2(&w);
        if h <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        w.iter_mut().for_each(|x| *x /= h);
        basis.push(w.clone());
        w = op(&w);
    }
    basis
}

/// `[U V_j]`.
pub fn augmented(u: &DenseMatrix, v: &[Vec<f64>], j: usize) -> DenseMatrix {
    let vm = DenseMatrix::from_columns(u.nrows(), &v[..j]);
    if u.ncols() == 0 {
        vm
    } else {
        u.hstack(&vm)
    }
}
