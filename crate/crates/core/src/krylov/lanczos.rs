use super::BREAKDOWN_TOL;
use crate::error::{Error, Result};
use crate::vector;

/// Hermitian Lanczos with the three-term recurrence. Only the two most recent
/// basis vectors are kept; the tridiagonal coefficients accumulate.
#[derive(Debug, Clone)]
pub struct LanczosState {
    v_prev: Vec<f64>,
    v: Vec<f64>,
    beta: f64,
    beta1: f64,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    normest: f64,
    breakdown: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosStep {
    pub alpha: f64,
    pub beta_next: f64,
    pub breakdown: bool,
}

impl LanczosState {
    pub fn new(start: &[f64]) -> Result<Self> {
        let beta1 = vector::norm2(start);
        if !(beta1 > 0.0) || !beta1.is_finite() {
            return Err(Error::InvalidInput("Lanczos start vector must be nonzero and finite".into()));
        }
        let mut v = start.to_vec();
        vector::scale(1.0 / beta1, &mut v);
        Ok(Self {
            v_prev: vec![0.0; start.len()],
            v,
            beta: 0.0,
            beta1,
            diag: Vec::new(),
            offdiag: Vec::new(),
            normest: 0.0,
            breakdown: false,
        })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    /// The vector the next step multiplies.
    pub fn current(&self) -> &[f64] {
        &self.v
    }

    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn steps(&self) -> usize {
        self.diag.len()
    }

    /// Advances with `w = op(v_j)`. The new vector is orthogonalized against
    /// the two most recent ones, with a second local pass.
    pub fn push(&mut self, mut w: Vec<f64>) -> LanczosStep {
        assert!(!self.breakdown, "Lanczos extended past a breakdown");
        self.normest = self.normest.max(vector::norm2(&w));
        vector::axpy(-self.beta, &self.v_prev, &mut w);
        let mut alpha = vector::dot(&self.v, &w);
        vector::axpy(-alpha, &self.v, &mut w);
        let c = vector::dot(&self.v, &w);
        vector::axpy(-c, &self.v, &mut w);
        alpha += c;
        let c = vector::dot(&self.v_prev, &w);
        vector::axpy(-c, &self.v_prev, &mut w);
        let beta_next = vector::norm2(&w);
        self.diag.push(alpha);
        self.offdiag.push(beta_next);
        self.breakdown = beta_next <= BREAKDOWN_TOL * self.normest || beta_next == 0.0;
        if !self.breakdown {
            vector::scale(1.0 / beta_next, &mut w);
            self.v_prev = std::mem::replace(&mut self.v, w);
            self.beta = beta_next;
        }
        LanczosStep {
            alpha,
            beta_next,
            breakdown: self.breakdown,
        }
    }
}

/// The scalar part of MINRES: Givens QR of the growing tridiagonal matrix and
/// the rotated right-hand side.
#[derive(Debug, Clone)]
pub struct MinresRecurrence {
    cs: f64,
    sn: f64,
    dbar: f64,
    epsln: f64,
    phibar: f64,
}

/// Quantities of one MINRES step: the new column of `R` is
/// `(eps_prev, delta, gamma)` and `phi` is the step length.
#[derive(Debug, Clone, Copy)]
pub struct MinresRotation {
    pub phi: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps_prev: f64,
}

impl MinresRecurrence {
    pub fn new(beta1: f64) -> Self {
        Self {
            cs: -1.0,
            sn: 0.0,
            dbar: 0.0,
            epsln: 0.0,
            phibar: beta1,
        }
    }

    pub fn step(&mut self, alpha: f64, beta_next: f64) -> MinresRotation {
        let eps_prev = self.epsln;
        let delta = self.cs * self.dbar + self.sn * alpha;
        let gbar = self.sn * self.dbar - self.cs * alpha;
        self.epsln = self.sn * beta_next;
        self.dbar = -self.cs * beta_next;
        let mut gamma = gbar.hypot(beta_next);
        if gamma == 0.0 {
            gamma = f64::EPSILON;
        }
        self.cs = gbar / gamma;
        self.sn = beta_next / gamma;
        let phi = self.cs * self.phibar;
        self.phibar *= self.sn;
        MinresRotation {
            phi,
            gamma,
            delta,
            eps_prev,
        }
    }

    /// Current residual norm of the projected problem.
    pub fn residual(&self) -> f64 {
        self.phibar.abs()
    }
}

/// Direction vectors `w_j = (v_j - eps w_{j-2} - delta w_{j-1}) / gamma`,
/// i.e. the columns of `V_j R_j^{-1}`. The same recurrence applied to other
/// columns (e.g. recycle coefficients) gives `B_j R_j^{-1}`.
#[derive(Debug, Clone)]
pub struct WRecurrence {
    older: Vec<f64>,
    old: Vec<f64>,
}

impl WRecurrence {
    pub fn new(len: usize) -> Self {
        Self {
            older: vec![0.0; len],
            old: vec![0.0; len],
        }
    }

    /// Computes the next direction and returns it.
    pub fn next(&mut self, v: &[f64], rot: &MinresRotation) -> &[f64] {
        let mut w = v.to_vec();
        vector::axpy(-rot.eps_prev, &self.older, &mut w);
        vector::axpy(-rot.delta, &self.old, &mut w);
        vector::scale(1.0 / rot.gamma, &mut w);
        self.older = std::mem::replace(&mut self.old, w);
        &self.old
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{sym_tridiag_eig, DenseMatrix};
    use crate::sparse::LinearOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficients_match_projected_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 40;
        let r = DenseMatrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let a = r.matmul(&r.transpose());
        let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut st = LanczosState::new(&start).unwrap();
        let mut basis = vec![st.current().to_vec()];
        for _ in 0..8 {
            let w = a.apply_vec(st.current());
            st.push(w);
            basis.push(st.current().to_vec());
        }
        let v = DenseMatrix::from_columns(n, &basis[..8]);
        assert!(v.orthonormality_defect() < 1e-8);
        let t = v.tr_matmul(&a.matmul(&v));
        for i in 0..8 {
            assert!((t[(i, i)] - st.diag[i]).abs() < 1e-9 * a.frobenius_norm());
            if i + 1 < 8 {
                assert!((t[(i + 1, i)] - st.offdiag[i]).abs() < 1e-9 * a.frobenius_norm());
            }
        }
        // tridiagonal eigenvalues lie inside the spectrum
        let (vals, _) = sym_tridiag_eig(&st.diag, &st.offdiag[..7]).unwrap();
        assert!(vals[0] >= -1e-10);
    }

    #[test]
    fn identity_breaks_down() {
        let mut st = LanczosState::new(&[0.0, 2.0]).unwrap();
        let w = st.current().to_vec();
        let s = st.push(w);
        assert!(s.breakdown);
        assert_eq!(s.alpha, 1.0);
    }

    #[test]
    fn w_recurrence_reproduces_v_rinv() {
        // R upper triangular with bandwidth 3, V arbitrary: W R = V
        let rots = [
            MinresRotation { phi: 0.0, gamma: 2.0, delta: 0.0, eps_prev: 0.0 },
            MinresRotation { phi: 0.0, gamma: 3.0, delta: 0.5, eps_prev: 0.0 },
            MinresRotation { phi: 0.0, gamma: 1.5, delta: -1.0, eps_prev: 0.25 },
        ];
        let v = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let mut rec = WRecurrence::new(2);
        let ws: Vec<Vec<f64>> = v.iter().zip(&rots).map(|(vi, r)| rec.next(vi, r).to_vec()).collect();
        for j in 0..3 {
            let mut recon = vec![0.0; 2];
            vector::axpy(rots[j].gamma, &ws[j], &mut recon);
            if j >= 1 {
                vector::axpy(rots[j].delta, &ws[j - 1], &mut recon);
            }
            if j >= 2 {
                vector::axpy(rots[j].eps_prev, &ws[j - 2], &mut recon);
            }
            assert!(vector::norm2(&vector::sub(&recon, &v[j])) < 1e-15);
        }
    }
}
