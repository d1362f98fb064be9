//! Deterministic test sequences of slowly changing matrices.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// 5-point stencil on a `sqrt(n) x sqrt(n)` grid, Dirichlet boundary,
    /// variable edge conductivities. Symmetric positive definite.
    Laplacian2d,
    /// Sparse, strictly diagonally dominant, nonsymmetric.
    DiagPerturb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub count: usize,
    /// Relative size of the change from one system to the next.
    pub perturbation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GeneratedSequence {
    pub matrices: Vec<CsrMatrix>,
    /// One right-hand side shared by the whole sequence.
    pub rhs: Vec<f64>,
}

impl GeneratorSpec {
    pub fn symmetric(&self) -> bool {
        self.kind == GeneratorKind::Laplacian2d
    }

    pub fn spd(&self) -> bool {
        self.kind == GeneratorKind::Laplacian2d
    }

    fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidInput("generated systems need n >= 4".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidInput("generated sequence needs count >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.perturbation) {
            return Err(Error::InvalidInput("perturbation must lie in [0, 1)".into()));
        }
        if self.kind == GeneratorKind::DiagPerturb && self.perturbation > 1.0 / 3.0 {
            return Err(Error::InvalidInput("diag_perturb keeps dominance only for perturbation <= 1/3".into()));
        }
        Ok(())
    }
}

/// Builds the whole sequence. Each system perturbs the previous one entrywise
/// by factors in `[1 - p, 1 + p]`, so `|A_{i+1} - A_i| <= p |A_i|` entrywise
/// and therefore in the Frobenius norm.
pub fn generate_sequence(spec: &GeneratorSpec) -> Result<GeneratedSequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let matrices = match spec.kind {
        GeneratorKind::Laplacian2d => laplacian_sequence(spec, &mut rng)?,
        GeneratorKind::DiagPerturb => diag_perturb_sequence(spec, &mut rng)?,
    };
    let mut rhs_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x05ee_db0b);
    let rhs = (0..spec.n).map(|_| rhs_rng.gen_range(-1.0..1.0)).collect();
    Ok(GeneratedSequence { matrices, rhs })
}

fn factor(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        1.0 + p * rng.gen_range(-1.0..1.0)
    }
}

fn laplacian_sequence(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CsrMatrix>> {
    let m = (spec.n as f64).sqrt().round() as usize;
    if m * m != spec.n {
        return Err(Error::InvalidInput(format!("laplacian2d needs a perfect square n, got {}", spec.n)));
    }
    // horizontal edges (m+1 per row, boundary ones lead to the Dirichlet ghost)
    // and vertical edges likewise
    let mut horiz = vec![1.0; m * (m + 1)];
    let mut vert = vec![1.0; (m + 1) * m];
    let mut out = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        if i > 0 {
            for k in horiz.iter_mut().chain(vert.iter_mut()) {
                *k *= factor(rng, spec.perturbation);
            }
        }
        out.push(assemble_laplacian(m, &horiz, &vert)?);
    }
    Ok(out)
}

/// `horiz[r * (m+1) + c]` joins grid points `(r, c-1)` and `(r, c)`;
/// `vert[r * m + c]` joins `(r-1, c)` and `(r, c)`. Out-of-grid endpoints are
/// the boundary.
fn assemble_laplacian(m: usize, horiz: &[f64], vert: &[f64]) -> Result<CsrMatrix> {
    let idx = |r: usize, c: usize| r * m + c;
    let mut t = Vec::with_capacity(5 * m * m);
    for r in 0..m {
        for c in 0..=m {
            let k = horiz[r * (m + 1) + c];
            let left = (c > 0).then(|| idx(r, c - 1));
            let right = (c < m).then(|| idx(r, c));
            couple(&mut t, left, right, k);
        }
    }
    for r in 0..=m {
        for c in 0..m {
            let k = vert[r * m + c];
            let up = (r > 0).then(|| idx(r - 1, c));
            let down = (r < m).then(|| idx(r, c));
            couple(&mut t, up, down, k);
        }
    }
    CsrMatrix::from_triplets(m * m, m * m, t)
}

fn couple(t: &mut Vec<(usize, usize, f64)>, a: Option<usize>, b: Option<usize>, k: f64) {
    if let Some(a) = a {
        t.push((a, a, k));
    }
    if let Some(b) = b {
        t.push((b, b, k));
    }
    if let (Some(a), Some(b)) = (a, b) {
        t.push((a, b, -k));
        t.push((b, a, -k));
    }
}

fn diag_perturb_sequence(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CsrMatrix>> {
    let n = spec.n;
    let per_row = 4.min(n - 1);
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(n * (per_row + 1));
    for i in 0..n {
        let mut cols: Vec<usize> = Vec::with_capacity(per_row);
        while cols.len() < per_row {
            let j = rng.gen_range(0..n);
            if j != i && !cols.contains(&j) {
                cols.push(j);
            }
        }
        let mut sum = 0.0;
        for j in cols {
            let v = rng.gen_range(-1.0..1.0);
            sum += f64::abs(v);
            entries.push((i, j, v));
        }
        // margin 2x so that dominance survives perturbations up to 1/3
        entries.push((i, i, 2.0 * sum + 1.0));
    }
    let block = (n / 10).max(1);
    let mut out = Vec::with_capacity(spec.count);
    for s in 0..spec.count {
        if s > 0 {
            let start = rng.gen_range(0..n);
            for e in entries.iter_mut() {
                if (e.0 + n - start) % n < block {
                    e.2 *= factor(rng, spec.perturbation);
                }
            }
        }
        out.push(CsrMatrix::from_triplets(n, n, entries.clone())?);
    }
    Ok(out)
}
