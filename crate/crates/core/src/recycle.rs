//! Recycle spaces: the pair `(U, C = A U)` and the projectors built on it.
//!
//! Every variant realizes `Q = C (Ũ^T C)^{-1} Ũ^T` and its sibling
//! `P = U (Ũ^T C)^{-1} Ũ^T A`, so that `Q A = A P`:
//!
//! | variant      | normalization       | `Ũ` | `Ũ^T C` |
//! |--------------|---------------------|-----|---------|
//! | `Orthogonal` | `C^T C = I`         | `C` | `I`     |
//! | `Galerkin`   | `U^T A U = I`       | `U` | `I`     |
//! | `ObliqueFom` | `C^T C = I`         | `U` | `U^T A U`, factored |
//! | `ObliqueMr`  | same as `ObliqueFom`| `U` | `U^T A U`, factored |
//!
//! The two oblique variants hold identical data; they differ only in whether
//! the solver imposes a Galerkin or a minimal-residual condition on the
//! projected system.

use crate::dense::{svd_small, sym_eig, thin_qr, DenseMatrix, LuFactor, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::sparse::LinearOperator;
use crate::vector;
use serde::{Deserialize, Serialize};

/// Column pairs `(U, C)` as vectors.
type Columns = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Default cap on the recycle dimension.
pub const RECYCLE_CAP: usize = 100;

/// Largest condition number accepted for `U^T A U` in the oblique variants.
const GRAM_COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Orthogonal,
    Galerkin,
    ObliqueFom,
    ObliqueMr,
}

#[derive(Debug, Clone)]
pub struct RecycleSpace {
    variant: Variant,
    n: usize,
    u: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    gram: Option<LuFactor>,
    setup_matvecs: usize,
}

impl RecycleSpace {
    /// The `k = 0` space; every projector is the identity.
    pub fn empty(n: usize, variant: Variant) -> Self {
        Self {
            variant,
            n,
            u: Vec::new(),
            c: Vec::new(),
            gram: None,
            setup_matvecs: 0,
        }
    }

    /// Builds the space from raw vectors and their images `A U_raw`, without
    /// touching the operator. Dependent directions are dropped.
    pub fn from_image(u_raw: &DenseMatrix, au_raw: &DenseMatrix, variant: Variant) -> Result<Self> {
        let (n, k) = (u_raw.nrows(), u_raw.ncols());
        if au_raw.nrows() != n || au_raw.ncols() != k {
            return Err(Error::InvalidInput("U and A U must have the same shape".into()));
        }
        if k > RECYCLE_CAP {
            return Err(Error::InvalidInput(format!("recycle dimension {k} exceeds the cap {RECYCLE_CAP}")));
        }
        if k == 0 {
            return Ok(Self::empty(n, variant));
        }
        if !vector::all_finite(u_raw.data()) || !vector::all_finite(au_raw.data()) {
            return Err(Error::InvalidInput("recycle vectors must be finite".into()));
        }
        let (u, c) = match variant {
            Variant::Galerkin => a_orthonormalize(u_raw, au_raw)?,
            _ => orthonormalize_image(u_raw, au_raw)?,
        };
        let mut rs = Self {
            variant,
            n,
            u,
            c,
            gram: None,
            setup_matvecs: 0,
        };
        if matches!(variant, Variant::ObliqueFom | Variant::ObliqueMr) {
            rs.factor_gram()?;
        }
        if rs.u.is_empty() {
            return Err(Error::EmptyRecycleSpace);
        }
        Ok(rs)
    }

    /// Reduces `k` until `U^T A U` is acceptably conditioned, then factors it.
    fn factor_gram(&mut self) -> Result<()> {
        loop {
            let k = self.u.len();
            if k == 0 {
                return Err(Error::EmptyRecycleSpace);
            }
            let g = DenseMatrix::from_columns(self.n, &self.u).tr_matmul(&DenseMatrix::from_columns(self.n, &self.c));
            let svd = svd_small(&g)?;
            let smax = svd.sing[0];
            let smin = svd.sing[k - 1];
            if smin > 0.0 && smax / smin <= GRAM_COND_LIMIT {
                self.gram = Some(LuFactor::new(&g)?);
                return Ok(());
            }
            // drop the right singular direction belonging to smin
            let keep: Vec<usize> = (0..k - 1).collect();
            let y = svd.right.select_columns(&keep);
            self.u = rotate(&self.u, &y, self.n);
            self.c = rotate(&self.c, &y, self.n);
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn k(&self) -> usize {
        self.u.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u(&self) -> &[Vec<f64>] {
        &self.u
    }

    /// `C = A U`.
    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }

    pub fn u_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.n, &self.u)
    }

    pub fn c_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.n, &self.c)
    }

    /// Operator applications spent building this space.
    pub fn setup_matvecs(&self) -> usize {
        self.setup_matvecs
    }

    /// Coefficients `(Ũ^T C)^{-1} Ũ^T v` of `Q v` in the basis `C`.
    pub fn q_coefficients(&self, v: &[f64]) -> Vec<f64> {
        match self.variant {
            Variant::Orthogonal => self.c.iter().map(|c| vector::dot(c, v)).collect(),
            Variant::Galerkin => self.u.iter().map(|u| vector::dot(u, v)).collect(),
            Variant::ObliqueFom | Variant::ObliqueMr => {
                let utv: Vec<f64> = self.u.iter().map(|u| vector::dot(u, v)).collect();
                match &self.gram {
                    Some(lu) => lu.solve(&utv),
                    None => utv,
                }
            }
        }
    }

    /// `Q v`.
    pub fn apply_q(&self, v: &[f64]) -> Vec<f64> {
        vector::combine(&self.c, &self.q_coefficients(v), self.n)
    }

    /// `w = (I - Q) v` and the coefficients of the removed part, with one
    /// re-projection pass.
    pub fn apply_q_complement(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut w = v.to_vec();
        let mut coeffs = vec![0.0; self.k()];
        if self.k() == 0 {
            return (w, coeffs);
        }
        for _ in 0..2 {
            let c = self.q_coefficients(&w);
            for (l, cl) in c.iter().enumerate() {
                vector::axpy(-cl, &self.c[l], &mut w);
                coeffs[l] += cl;
            }
        }
        (w, coeffs)
    }

    /// `P v = U (Ũ^T C)^{-1} Ũ^T A v`; one application of `op`.
    pub fn apply_p(&self, op: &dyn LinearOperator, v: &[f64]) -> Vec<f64> {
        let av = op.apply_vec(v);
        vector::combine(&self.u, &self.q_coefficients(&av), self.n)
    }

    /// `x0 + U (q(r0) - B y) + V y`, where column `l` of `B` holds the
    /// projection coefficients captured for `A v_l`.
    pub fn assemble_solution(
        &self,
        x0: &[f64],
        r0: &[f64],
        basis: &[Vec<f64>],
        y: &[f64],
        b: &[Vec<f64>],
    ) -> Vec<f64> {
        let mut x = x0.to_vec();
        vector::axpy(1.0, &vector::combine(&basis[..y.len()], y, self.n), &mut x);
        if self.k() > 0 {
            let mut z = self.q_coefficients(r0);
            for (l, &yl) in y.iter().enumerate() {
                vector::axpy(-yl, &b[l], &mut z);
            }
            vector::axpy(1.0, &vector::combine(&self.u, &z, self.n), &mut x);
        }
        x
    }

    /// `||A U - C||_F`, for checking the stored image against an operator.
    pub fn image_defect(&self, op: &dyn LinearOperator) -> f64 {
        self.u
            .iter()
            .zip(&self.c)
            .map(|(u, c)| {
                let d = vector::sub(&op.apply_vec(u), c);
                vector::dot(&d, &d)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// The raw material for re-preparing against another operator.
    pub fn into_raw(self) -> DenseMatrix {
        DenseMatrix::from_columns(self.n, &self.u)
    }
}

fn rotate(cols: &[Vec<f64>], y: &DenseMatrix, n: usize) -> Vec<Vec<f64>> {
    (0..y.ncols()).map(|j| vector::combine(cols, &y.column(j), n)).collect()
}

/// `C = qr(A U_raw).Q`, `U = U_raw R^{-1}` over the kept columns.
fn orthonormalize_image(u_raw: &DenseMatrix, au_raw: &DenseMatrix) -> Result<Columns> {
    let qr = thin_qr(au_raw, DEFAULT_RANK_TOL)?;
    if qr.rank == 0 {
        return Err(Error::EmptyRecycleSpace);
    }
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(qr.rank);
    for (t, &j) in qr.kept.iter().enumerate() {
        let mut col = u_raw.column(j);
        for (s, us) in u.iter().enumerate() {
            vector::axpy(-qr.r[(s, j)], us, &mut col);
        }
        vector::scale(1.0 / qr.r[(t, j)], &mut col);
        u.push(col);
    }
    let c = qr.q.columns();
    debug_assert_eq!(c.len(), u.len());
    Ok((u, c))
}

/// `U^T A U = I` via an orthonormal basis of `U_raw` and the eigenvectors of
/// its Galerkin matrix; directions with tiny or nonpositive curvature drop.
fn a_orthonormalize(u_raw: &DenseMatrix, au_raw: &DenseMatrix) -> Result<Columns> {
    let n = u_raw.nrows();
    let qr = thin_qr(u_raw, DEFAULT_RANK_TOL)?;
    if qr.rank == 0 {
        return Err(Error::EmptyRecycleSpace);
    }
    // images of the orthonormal basis: A Q = A U_raw[:, kept] R_kept^{-1}
    let mut aq: Vec<Vec<f64>> = Vec::with_capacity(qr.rank);
    for (t, &j) in qr.kept.iter().enumerate() {
        let mut col = au_raw.column(j);
        for (s, prev) in aq.iter().enumerate() {
            vector::axpy(-qr.r[(s, j)], prev, &mut col);
        }
        vector::scale(1.0 / qr.r[(t, j)], &mut col);
        aq.push(col);
    }
    let q = qr.q.columns();
    let r = q.len();
    let mut g = DenseMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            g[(i, j)] = 0.5 * (vector::dot(&q[i], &aq[j]) + vector::dot(&q[j], &aq[i]));
        }
    }
    let (vals, vecs) = sym_eig(&g)?;
    let lmax = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut u = Vec::new();
    let mut c = Vec::new();
    for (idx, &lam) in vals.iter().enumerate() {
        if lam > DEFAULT_RANK_TOL * lmax && lam > 0.0 {
            let mut z = vecs.column(idx);
            vector::scale(1.0 / lam.sqrt(), &mut z);
            u.push(vector::combine(&q, &z, n));
            c.push(vector::combine(&aq, &z, n));
        }
    }
    if u.is_empty() {
        return Err(Error::EmptyRecycleSpace);
    }
    Ok((u, c))
}

/// Applies `op` to each column of `U_raw` and builds the space. Counts `k`
/// operator applications in [`RecycleSpace::setup_matvecs`].
pub fn prepare_recycle(op: &dyn LinearOperator, u_raw: &DenseMatrix, variant: Variant) -> Result<RecycleSpace> {
    let n = op.dim();
    if u_raw.nrows() != n {
        return Err(Error::InvalidInput(format!(
            "recycle vectors have length {} but operator is {n}x{n}",
            u_raw.nrows()
        )));
    }
    if u_raw.ncols() > RECYCLE_CAP {
        return Err(Error::InvalidInput(format!(
            "recycle dimension {} exceeds the cap {RECYCLE_CAP}",
            u_raw.ncols()
        )));
    }
    if !vector::all_finite(u_raw.data()) {
        return Err(Error::InvalidInput("recycle vectors must be finite".into()));
    }
    let images: Vec<Vec<f64>> = u_raw.columns().iter().map(|u| op.apply_vec(u)).collect();
    let au = DenseMatrix::from_columns(n, &images);
    let mut rs = RecycleSpace::from_image(u_raw, &au, variant)?;
    rs.setup_matvecs = u_raw.ncols();
    Ok(rs)
}

/// `| ||b - A x|| - inner |`: how far a solver's internal residual norm is
/// from the true one.
pub fn residual_consistency_check(op: &dyn LinearOperator, b: &[f64], x: &[f64], inner: f64) -> f64 {
    let r = vector::sub(b, &op.apply_vec(x));
    (vector::norm2(&r) - inner).abs()
}

/// `(I - Q)(A + shift I)`, the operator the recycled Krylov spaces are built
/// from.
pub struct ProjectedOperator<'a> {
    pub op: &'a dyn LinearOperator,
    pub space: &'a RecycleSpace,
    pub shift: f64,
}

impl LinearOperator for ProjectedOperator<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        vector::axpy(self.shift, x, y);
        let (w, _) = self.space.apply_q_complement(y);
        y.copy_from_slice(&w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, k: usize, rng: &mut impl Rng) -> DenseMatrix {
        DenseMatrix::new(n, k, (0..n * k).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn shifted_random(n: usize, rng: &mut impl Rng) -> DenseMatrix {
        let mut a = random(n, n, rng).scaled(1.0 / (n as f64).sqrt());
        for i in 0..n {
            a[(i, i)] += 3.0;
        }
        a
    }

    fn spd(n: usize, rng: &mut impl Rng) -> DenseMatrix {
        let r = random(n, n, rng);
        let mut a = r.matmul(&r.transpose()).scaled(1.0 / n as f64);
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    #[test]
    fn scalar_normalization() {
        let a = CsrMatrix::from_diag(&[2.0, 1.0, 1.0]).unwrap();
        let u = DenseMatrix::from_columns(3, &[vec![1.0, 0.0, 0.0]]);
        let rs = prepare_recycle(&a, &u, Variant::Orthogonal).unwrap();
        assert_eq!(rs.k(), 1);
        assert!((rs.u()[0][0] - 0.5).abs() < 1e-15);
        assert!((rs.c()[0][0] - 1.0).abs() < 1e-15);
        assert_eq!(rs.setup_matvecs(), 1);
    }

    #[test]
    fn duplicated_column_reduces_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = shifted_random(20, &mut rng);
        let base = random(20, 3, &mut rng);
        let mut cols = base.columns();
        cols.push(cols[1].clone());
        for variant in [Variant::Orthogonal, Variant::ObliqueFom, Variant::Galerkin] {
            let op = if variant == Variant::Galerkin { spd(20, &mut rng) } else { a.clone() };
            let rs = prepare_recycle(&op, &DenseMatrix::from_columns(20, &cols), variant).unwrap();
            assert_eq!(rs.k(), 3, "{variant:?}");
        }
    }

    #[test]
    fn orthogonal_invariants_on_random_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let a = shifted_random(40, &mut rng);
        let rs = prepare_recycle(&a, &random(40, 5, &mut rng), Variant::Orthogonal).unwrap();
        assert!(rs.c_matrix().orthonormality_defect() <= 1e-10);
        let normest = crate::sparse::norm_estimate(&a, 30);
        assert!(rs.image_defect(&a) <= 1e-10 * normest * rs.u_matrix().frobenius_norm());
    }

    #[test]
    fn galerkin_is_a_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = spd(30, &mut rng);
        let rs = prepare_recycle(&a, &random(30, 4, &mut rng), Variant::Galerkin).unwrap();
        let u = rs.u_matrix();
        let g = u.tr_matmul(&a.matmul(&u));
        assert!(g.sub(&DenseMatrix::identity(4)).max_abs() < 1e-12);
        assert!(rs.image_defect(&a) < 1e-12);
    }

    #[test]
    fn all_dependent_is_empty() {
        let a = CsrMatrix::identity(3);
        let z = DenseMatrix::zeros(3, 2);
        assert!(matches!(prepare_recycle(&a, &z, Variant::Orthogonal), Err(Error::EmptyRecycleSpace)));
        assert_eq!(prepare_recycle(&a, &DenseMatrix::zeros(3, 0), Variant::Orthogonal).unwrap().k(), 0);
    }

    #[test]
    fn complement_examples() {
        let rs = RecycleSpace::empty(3, Variant::Orthogonal);
        let (w, c) = rs.apply_q_complement(&[1.0, 2.0, 3.0]);
        assert_eq!(w, vec![1.0, 2.0, 3.0]);
        assert!(c.is_empty());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = shifted_random(25, &mut rng);
        let rs = prepare_recycle(&a, &random(25, 3, &mut rng), Variant::Orthogonal).unwrap();
        let v = vector::combine(rs.c(), &[1.0, -2.0, 0.5], 25);
        let (w, _) = rs.apply_q_complement(&v);
        assert!(vector::norm2(&w) < 1e-14);
    }

    #[test]
    fn oblique_complement_is_orthogonal_to_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = shifted_random(30, &mut rng);
        let rs = prepare_recycle(&a, &random(30, 4, &mut rng), Variant::ObliqueFom).unwrap();
        let v: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (w, _) = rs.apply_q_complement(&v);
        for u in rs.u() {
            assert!(vector::dot(u, &w).abs() <= 1e-12 * vector::norm2(&v) * vector::norm2(u));
        }
    }

    #[test]
    fn assemble_with_no_krylov_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = shifted_random(15, &mut rng);
        let rs = prepare_recycle(&a, &random(15, 2, &mut rng), Variant::Orthogonal).unwrap();
        let b: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x0 = vec![0.0; 15];
        let x = rs.assemble_solution(&x0, &b, &[], &[], &[]);
        let expect = vector::combine(rs.u(), &rs.q_coefficients(&b), 15);
        assert!(vector::norm2(&vector::sub(&x, &expect)) < 1e-15);
        // the residual is the projected one
        let r = vector::sub(&b, &a.matvec(&x));
        let (w, _) = rs.apply_q_complement(&b);
        assert!(vector::norm2(&vector::sub(&r, &w)) < 1e-12);
    }

    proptest! {
        #[test]
        fn pythagoras_idempotence_and_siblings(seed in any::<u64>(), k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 24;
            let a = shifted_random(n, &mut rng);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nv = vector::norm2(&v);
            let normest = crate::sparse::norm_estimate(&a, 30);
            for variant in [Variant::Orthogonal, Variant::ObliqueFom, Variant::Galerkin] {
                let op = if variant == Variant::Galerkin { spd(n, &mut rng) } else { a.clone() };
                let rs = prepare_recycle(&op, &random(n, k, &mut rng), variant).unwrap();
                let (w, coeffs) = rs.apply_q_complement(&v);
                let (w2, _) = rs.apply_q_complement(&w);
                prop_assert!(vector::norm2(&vector::sub(&w, &w2)) <= 1e-12 * nv);
                if variant == Variant::Orthogonal {
                    let lhs = nv * nv;
                    let rhs = vector::dot(&w, &w) + vector::dot(&coeffs, &coeffs);
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
                }
                let q_av = rs.apply_q(&op.apply_vec(&v));
                let a_pv = op.apply_vec(&rs.apply_p(&op, &v));
                let scale = normest.max(crate::sparse::norm_estimate(&op, 30));
                prop_assert!(vector::norm2(&vector::sub(&q_av, &a_pv)) <= 1e-10 * scale * nv);
            }
        }
    }
}
