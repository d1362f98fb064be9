//! Choosing what to recycle.
//!
//! The eigenvector-based selectors work from a search space `S` together with
//! its image `A S`, both held explicitly. The solvers already have these
//! images: for GCRO-DR `A [U V_j] = [C V_{j+1}] Ĥ`, and the short-recurrence
//! solvers store `A v` for each vector they put in the window. Selection thus
//! costs no extra operator applications.

use crate::dense::{generalized_eig_small, svd_small, sym_eig, thin_qr, DenseMatrix, EigenValue, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::krylov::ArnoldiState;
use crate::recycle::{RecycleSpace, RECYCLE_CAP};
use crate::vector;
use serde::{Deserialize, Serialize};

/// A current recycle candidate `U` with its images `A U`.
pub type Current<'a> = (&'a [Vec<f64>], &'a [Vec<f64>]);
type OwnedCurrent = (Vec<Vec<f64>>, Vec<Vec<f64>>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    HarmonicRitz,
    Ritz,
    PodSnapshots,
    PreviousSolutions,
    #[default]
    None,
}

/// Which end of the spectrum to keep. Small eigenvalues are the default: for
/// elliptic problems the large ones are the most sensitive to local changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    #[default]
    SmallestMagnitude,
    LargestMagnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SelectorSpec {
    #[serde(default)]
    pub kind: SelectorKind,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub which: Which,
    /// Window length `p` for the short-recurrence solvers; `2k` if absent.
    #[serde(default)]
    pub window: Option<usize>,
}

impl SelectorSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(kind: SelectorKind, k: usize) -> Self {
        Self {
            kind,
            k,
            ..Self::default()
        }
    }

    pub fn window_len(&self) -> usize {
        self.window.unwrap_or(2 * self.k).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > RECYCLE_CAP {
            return Err(Error::InvalidInput(format!("selector k = {} exceeds the cap {RECYCLE_CAP}", self.k)));
        }
        Ok(())
    }

    /// Whether the solver itself produces the next recycle space.
    pub fn is_spectral(&self) -> bool {
        self.k > 0 && matches!(self.kind, SelectorKind::HarmonicRitz | SelectorKind::Ritz)
    }
}

/// Selected vectors and their images under the operator they came from.
#[derive(Debug, Clone)]
pub struct Selected {
    pub u: DenseMatrix,
    pub au: DenseMatrix,
    /// `|theta|` of each selected (harmonic) Ritz value; a conjugate pair
    /// contributes two equal entries.
    pub values: Vec<f64>,
}

impl Selected {
    pub fn k(&self) -> usize {
        self.u.ncols()
    }
}

/// Harmonic Ritz vectors of `A` over `[U V_j]`.
///
/// From `A [U V_j] = [C V_{j+1}] Ĥ` with `Ĥ = [[I, B], [0, H]]`, the condition
/// `A w - theta w ⊥ A [U V_j]` for `w = [U V_j] z` reads
/// `Ĥ^T F^T F Ĥ z = theta Ĥ^T F^T W z` with `F = [C V_{j+1}]`,
/// `W = [U V_j]`. It is solved as `G2 z = mu G1 z` with `G1 = Ĥ^T F^T F Ĥ`
/// (symmetric positive definite when `A W` has full rank) and
/// `G2 = Ĥ^T F^T W`, `theta = 1 / mu`. After a happy breakdown `V_{j+1}` does
/// not exist and the last row of `H` is dropped.
///
/// If `G1` is too ill-conditioned the standard Ritz pencil is used instead.
pub fn harmonic_ritz_select(
    rs: &RecycleSpace,
    arn: &ArnoldiState,
    b: &[Vec<f64>],
    k: usize,
    which: Which,
) -> Result<Selected> {
    let (w, aw) = augmented_arnoldi_images(rs, arn, b);
    match select_harmonic(&w, &aw, k, which) {
        Err(Error::IllConditionedPencil { cond }) => {
            log::warn!("harmonic Ritz pencil ill-conditioned (cond {cond:.2e}); using Ritz vectors");
            select_ritz_general(&w, &aw, k, which)
        }
        other => other,
    }
}

/// Standard Ritz vectors over the same augmented Arnoldi space.
pub fn arnoldi_ritz_select(
    rs: &RecycleSpace,
    arn: &ArnoldiState,
    b: &[Vec<f64>],
    k: usize,
    which: Which,
) -> Result<Selected> {
    let (w, aw) = augmented_arnoldi_images(rs, arn, b);
    select_ritz_general(&w, &aw, k, which)
}

/// `W = [U V_j]` and `A W = F Ĥ`, column by column.
fn augmented_arnoldi_images(rs: &RecycleSpace, arn: &ArnoldiState, b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = rs.n();
    let j = arn.j();
    let basis = arn.basis();
    let mut w: Vec<Vec<f64>> = rs.u().to_vec();
    let mut aw: Vec<Vec<f64>> = rs.c().to_vec();
    for l in 0..j {
        w.push(basis[l].clone());
        // A v_l = C b_l + V_{l+2} h_l
        let h = arn.h_column(l);
        let rows = h.len().min(basis.len());
        let mut img = vector::combine(&basis[..rows], &h[..rows], n);
        if rs.k() > 0 {
            vector::axpy(1.0, &vector::combine(rs.c(), &b[l], n), &mut img);
        }
        aw.push(img);
    }
    (w, aw)
}

fn gram(x: &[Vec<f64>], y: &[Vec<f64>]) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(x.len(), y.len());
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            g[(i, j)] = vector::dot(xi, yj);
        }
    }
    g
}

struct Candidate {
    mag: f64,
    value: f64,
    vectors: Vec<Vec<f64>>,
}

/// Keeps up to `k` coefficient vectors ordered by `which`, taking a complex
/// pair only when both of its real vectors fit.
fn pick(mut cands: Vec<Candidate>, k: usize, which: Which) -> (Vec<Vec<f64>>, Vec<f64>) {
    cands.sort_by(|a, b| match which {
        Which::SmallestMagnitude => a.mag.total_cmp(&b.mag),
        Which::LargestMagnitude => b.mag.total_cmp(&a.mag),
    });
    let mut z = Vec::new();
    let mut vals = Vec::new();
    for c in cands {
        if z.len() + c.vectors.len() > k {
            continue;
        }
        for v in c.vectors {
            z.push(v);
            vals.push(c.value);
        }
        if z.len() == k {
            break;
        }
    }
    (z, vals)
}

fn assemble(s: &[Vec<f64>], as_: &[Vec<f64>], z: &[Vec<f64>], values: Vec<f64>) -> Selected {
    let n = s[0].len();
    let u: Vec<Vec<f64>> = z.iter().map(|zi| vector::combine(s, zi, n)).collect();
    let au: Vec<Vec<f64>> = z.iter().map(|zi| vector::combine(as_, zi, n)).collect();
    Selected {
        u: DenseMatrix::from_columns(n, &u),
        au: DenseMatrix::from_columns(n, &au),
        values,
    }
}

fn empty_selection(n: usize) -> Selected {
    Selected {
        u: DenseMatrix::zeros(n, 0),
        au: DenseMatrix::zeros(n, 0),
        values: Vec::new(),
    }
}

fn select_harmonic(s: &[Vec<f64>], as_: &[Vec<f64>], k: usize, which: Which) -> Result<Selected> {
    if k == 0 || s.is_empty() {
        return Ok(empty_selection(s.first().map_or(0, Vec::len)));
    }
    let g1 = gram(as_, as_);
    let g2 = gram(as_, s);
    let pairs = generalized_eig_small(&g2, &g1)?;
    let cands = pairs
        .into_iter()
        .filter(|p| p.value.abs() > 0.0)
        .map(|p| Candidate {
            mag: 1.0 / p.value.abs(),
            value: 1.0 / p.value.abs(),
            vectors: p.vectors.columns(),
        })
        .collect();
    let (z, vals) = pick(cands, k, which);
    Ok(assemble(s, as_, &z, vals))
}

fn select_ritz_general(s: &[Vec<f64>], as_: &[Vec<f64>], k: usize, which: Which) -> Result<Selected> {
    if k == 0 || s.is_empty() {
        return Ok(empty_selection(s.first().map_or(0, Vec::len)));
    }
    let g = gram(s, s);
    let m = gram(s, as_);
    let pairs = generalized_eig_small(&m, &g)?;
    let cands = pairs
        .into_iter()
        .map(|p| {
            let mag = p.value.abs();
            let value = match p.value {
                EigenValue::Real(v) => v.abs(),
                EigenValue::Pair { .. } => mag,
            };
            Candidate {
                mag,
                value,
                vectors: p.vectors.columns(),
            }
        })
        .collect();
    let (z, vals) = pick(cands, k, which);
    Ok(assemble(s, as_, &z, vals))
}

/// Rayleigh-Ritz for a symmetric operator over `span(S)`, with `S` not
/// necessarily orthonormal: `G = S^T S = Q Λ Q^T`, directions with tiny `λ`
/// dropped, `T = Q Λ^{-1/2}`, then the symmetric eigenproblem of
/// `Â = T^T (S^T A S) T`. Returns the selection and `Â`'s eigenvalues.
fn symmetric_ritz(s: &[Vec<f64>], as_: &[Vec<f64>], k: usize, which: Which) -> Result<(Selected, DenseMatrix)> {
    let g = gram(s, s);
    let m0 = gram(s, as_);
    let d = s.len();
    let mut m = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = 0.5 * (m0[(i, j)] + m0[(j, i)]);
        }
    }
    let (lam, q) = sym_eig(&g)?;
    let lmax = lam.iter().fold(0.0_f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..d).filter(|&i| lam[i] > 1e-10 * lmax).collect();
    let mut t = q.select_columns(&keep);
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / lam[i].sqrt();
        for r in 0..d {
            t[(r, c)] *= s;
        }
    }
    let a_hat = t.tr_matmul(&m.matmul(&t));
    let (theta, y) = sym_eig(&a_hat)?;
    let cands = theta
        .iter()
        .enumerate()
        .map(|(i, &th)| Candidate {
            mag: th.abs(),
            value: th,
            vectors: vec![t.matvec(&y.column(i))],
        })
        .collect();
    let (z, vals) = pick(cands, k, which);
    Ok((assemble(s, as_, &z, vals), a_hat))
}

/// Fixed-length window of recent basis vectors and their images.
#[derive(Debug, Clone)]
pub struct RitzWindow {
    capacity: usize,
    vectors: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
}

impl RitzWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            vectors: Vec::new(),
            images: Vec::new(),
        }
    }

    pub fn push(&mut self, v: Vec<f64>, av: Vec<f64>) {
        self.vectors.push(v);
        self.images.push(av);
    }

    pub fn is_full(&self) -> bool {
        self.vectors.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }

    pub fn clear(&mut self) {
        self.vectors.clear();
        self.images.clear();
    }
}

/// Ritz vectors of a symmetric `A` over `span(U) + span(window)`.
///
/// `current` holds `U` and `A U`. The projected matrix is assembled from the
/// explicit images rather than from the tridiagonal coefficients, which keeps
/// the recycle/window coupling exact even when the window vectors have lost
/// orthogonality. Rank-deficient combinations reduce the dimension.
pub fn ritz_window_select(
    window: &RitzWindow,
    current: Option<Current<'_>>,
    k: usize,
    which: Which,
) -> Result<Selected> {
    let mut s: Vec<Vec<f64>> = Vec::new();
    let mut as_: Vec<Vec<f64>> = Vec::new();
    if let Some((u, au)) = current {
        s.extend_from_slice(u);
        as_.extend_from_slice(au);
    }
    s.extend_from_slice(window.vectors());
    as_.extend_from_slice(window.images());
    if k == 0 || s.is_empty() {
        return Ok(empty_selection(s.first().map_or(0, Vec::len)));
    }
    symmetric_ritz(&s, &as_, k, which).map(|(sel, _)| sel)
}

/// Same as [`ritz_window_select`] but also returns the projected matrix `Â`,
/// so callers can check the Rayleigh-quotient residual contract.
pub fn ritz_window_select_with_projection(
    window: &RitzWindow,
    current: Option<Current<'_>>,
    k: usize,
    which: Which,
) -> Result<(Selected, DenseMatrix)> {
    let mut s: Vec<Vec<f64>> = current.map(|(u, _)| u.to_vec()).unwrap_or_default();
    let mut as_: Vec<Vec<f64>> = current.map(|(_, au)| au.to_vec()).unwrap_or_default();
    s.extend_from_slice(window.vectors());
    as_.extend_from_slice(window.images());
    if s.is_empty() {
        return Err(Error::InvalidInput("empty search space".into()));
    }
    symmetric_ritz(&s, &as_, k, which)
}

/// Runs the overwrite rule for the short-recurrence solvers: whenever the
/// window fills, the recycle candidate is replaced by `k` Ritz vectors of
/// `span(candidate) + span(window)` and the window restarts.
#[derive(Debug, Clone)]
pub struct WindowedSelector {
    k: usize,
    which: Which,
    harmonic: bool,
    current: Option<OwnedCurrent>,
    values: Vec<f64>,
    window: RitzWindow,
}

impl WindowedSelector {
    /// Starts from the recycle space in use (its `U` and `C = A U`).
    pub fn new(spec: &SelectorSpec, rs: &RecycleSpace) -> Self {
        let current = (rs.k() > 0).then(|| (rs.u().to_vec(), rs.c().to_vec()));
        Self {
            k: spec.k,
            which: spec.which,
            harmonic: spec.kind == SelectorKind::HarmonicRitz,
            current,
            values: Vec::new(),
            window: RitzWindow::new(spec.window_len()),
        }
    }

    pub fn push(&mut self, v: Vec<f64>, av: Vec<f64>) -> Result<()> {
        self.window.push(v, av);
        if self.window.is_full() {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if self.window.is_empty() {
            return Ok(());
        }
        let sel = if self.harmonic {
            let mut s: Vec<Vec<f64>> = self.current.as_ref().map(|c| c.0.clone()).unwrap_or_default();
            let mut as_: Vec<Vec<f64>> = self.current.as_ref().map(|c| c.1.clone()).unwrap_or_default();
            s.extend_from_slice(self.window.vectors());
            as_.extend_from_slice(self.window.images());
            match select_harmonic(&s, &as_, self.k, self.which) {
                Err(Error::IllConditionedPencil { .. }) => symmetric_ritz(&s, &as_, self.k, self.which).map(|r| r.0),
                other => other,
            }?
        } else {
            let cur = self.current.as_ref().map(|(u, au)| (u.as_slice(), au.as_slice()));
            ritz_window_select(&self.window, cur, self.k, self.which)?
        };
        self.window.clear();
        if sel.k() > 0 {
            self.values = sel.values.clone();
            self.current = Some((sel.u.columns(), sel.au.columns()));
        }
        Ok(())
    }

    /// Processes the partial window and returns the final candidate.
    pub fn finish(mut self) -> Result<Option<Selected>> {
        self.flush()?;
        Ok(self.current.map(|(u, au)| {
            let n = u[0].len();
            Selected {
                u: DenseMatrix::from_columns(n, &u),
                au: DenseMatrix::from_columns(n, &au),
                values: self.values,
            }
        }))
    }
}

/// The `k` leading left singular vectors of the snapshot matrix (columns
/// used as given, not centered).
pub fn pod_select(snapshots: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    if snapshots.ncols() == 0 {
        return Err(Error::InvalidInput("POD needs at least one snapshot".into()));
    }
    let svd = svd_small(snapshots)?;
    let smax = svd.sing[0];
    let rank = svd.sing.iter().filter(|&&s| s > DEFAULT_RANK_TOL * smax && s > 0.0).count();
    let idx: Vec<usize> = (0..k.min(rank)).collect();
    Ok(svd.left.select_columns(&idx))
}

/// The `k` most recent solutions, orthonormalized; dependent ones drop.
pub fn previous_solutions_select(history: &[Vec<f64>], k: usize) -> Result<DenseMatrix> {
    let Some(first) = history.first() else {
        return Err(Error::InvalidInput("no previous solutions".into()));
    };
    let n = first.len();
    let recent: Vec<Vec<f64>> = history.iter().rev().take(k).cloned().collect();
    if recent.is_empty() {
        return Ok(DenseMatrix::zeros(n, 0));
    }
    let m = DenseMatrix::from_columns(n, &recent);
    if m.max_abs() == 0.0 {
        return Ok(DenseMatrix::zeros(n, 0));
    }
    Ok(thin_qr(&m, DEFAULT_RANK_TOL)?.q)
}
