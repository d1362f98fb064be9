use super::generate::{generate_sequence, GeneratorSpec};
use crate::error::{Error, Result};
use crate::krylov::SolverParams;
use crate::recycle::Variant;
use crate::selection::SelectorSpec;
use crate::solvers::ShiftedForm;
use crate::sparse::{read_matrix_market, CsrMatrix};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// A sequence of systems and how to solve them. Relative paths are taken
/// from the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    #[serde(default)]
    pub systems: Vec<SystemSpec>,
    /// Appended after `systems`: `count` generated matrices sharing one rhs.
    #[serde(default)]
    pub generate: Option<GeneratedSystems>,
    pub solver: SolverConfig,
    #[serde(default)]
    pub selector: SelectorSpec,
    #[serde(default)]
    pub warm_start: bool,
    #[serde(default)]
    pub recycle_across_systems: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub matrix: MatrixSource,
    pub rhs: RhsSource,
    #[serde(default)]
    pub symmetric: bool,
    #[serde(default)]
    pub spd: bool,
    #[serde(default)]
    pub shifts: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSource {
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsSource {
    /// An `n x 1` Matrix Market file.
    Path(PathBuf),
    Ones,
    /// Uniform in `[-1, 1]` from the given seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSystems {
    #[serde(flatten)]
    pub spec: GeneratorSpec,
    #[serde(default)]
    pub shifts: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gmres,
    Fom,
    Minres,
    Cg,
    Rgmres,
    Rfom,
    Rminres,
    Rcg,
}

impl SolverKind {
    pub fn needs_symmetric(self) -> bool {
        matches!(self, Self::Minres | Self::Cg | Self::Rminres | Self::Rcg)
    }

    pub fn needs_spd(self) -> bool {
        matches!(self, Self::Cg | Self::Rcg)
    }

    pub fn recycles(self) -> bool {
        matches!(self, Self::Rgmres | Self::Rfom | Self::Rminres | Self::Rcg)
    }

    /// Normalization the solver wants its recycle space in.
    pub fn variant(self, requested: Option<Variant>) -> Variant {
        match self {
            Self::Rgmres => match requested {
                Some(Variant::ObliqueMr) => Variant::ObliqueMr,
                _ => Variant::Orthogonal,
            },
            Self::Rfom => Variant::ObliqueFom,
            Self::Rcg => Variant::Galerkin,
            _ => Variant::Orthogonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Restart length `m` (also the basis size for shifted families).
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_maxit")]
    pub maxit: usize,
    /// `oblique_mr` selects the oblique rGMRES configuration.
    #[serde(default)]
    pub variant: Option<Variant>,
    #[serde(default)]
    pub shifted_form: Option<ShiftedFormConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftedFormConfig {
    Right,
    Left,
}

impl From<ShiftedFormConfig> for ShiftedForm {
    fn from(f: ShiftedFormConfig) -> Self {
        match f {
            ShiftedFormConfig::Right => ShiftedForm::Right,
            ShiftedFormConfig::Left => ShiftedForm::Left,
        }
    }
}

fn default_restart() -> usize {
    50
}

fn default_tol() -> f64 {
    1e-8
}

fn default_maxit() -> usize {
    1000
}

impl SolverConfig {
    pub fn params(&self) -> SolverParams {
        SolverParams {
            restart: self.restart,
            tol: self.tol,
            maxit: self.maxit,
            ..SolverParams::default()
        }
    }
}

/// A loaded system.
#[derive(Debug, Clone)]
pub struct System {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub symmetric: bool,
    pub spd: bool,
    pub shifts: Option<Vec<f64>>,
}

impl SequenceManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.systems.len() + self.generate.as_ref().map_or(0, |g| g.spec.count)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidInput("manifest lists no systems".into()));
        }
        self.selector.validate()?;
        if !(self.solver.tol > 0.0) || self.solver.restart == 0 {
            return Err(Error::InvalidInput("solver needs tol > 0 and restart > 0".into()));
        }
        let flags = self.systems.iter().map(|s| (s.symmetric, s.spd, &s.shifts)).chain(
            self.generate
                .iter()
                .flat_map(|g| std::iter::repeat_n((g.spec.symmetric(), g.spec.spd(), &g.shifts), g.spec.count)),
        );
        for (i, (sym, spd, shifts)) in flags.enumerate() {
            self.check_flags(sym, spd, shifts.is_some()).map_err(|msg| Error::System {
                index: i,
                source: Box::new(Error::InvalidInput(msg.into())),
            })?;
        }
        Ok(())
    }

    /// Whether a system with these declarations suits the configured solver.
    pub(crate) fn check_flags(&self, sym: bool, spd: bool, shifted: bool) -> std::result::Result<(), &'static str> {
        if spd && !sym {
            return Err("spd requires symmetric");
        }
        if self.solver.kind.needs_symmetric() && !sym {
            return Err("solver needs a system declared symmetric");
        }
        if self.solver.kind.needs_spd() && !spd && !shifted {
            return Err("solver needs a system declared spd");
        }
        if shifted && !sym {
            return Err("shifted families need a symmetric matrix");
        }
        Ok(())
    }

    /// Loads every system. Generated sequences are built once; a failure
    /// names the system it happened in.
    pub fn load(&self, base: &Path) -> Result<Vec<System>> {
        let mut out = Vec::with_capacity(self.len());
        for (i, s) in self.systems.iter().enumerate() {
            out.push(load_system(s, base).map_err(|e| Error::System {
                index: i,
                source: Box::new(e),
            })?);
        }
        if let Some(g) = &self.generate {
            let seq = generate_sequence(&g.spec).map_err(|e| Error::System {
                index: out.len(),
                source: Box::new(e),
            })?;
            for a in seq.matrices {
                out.push(System {
                    a,
                    b: seq.rhs.clone(),
                    symmetric: g.spec.symmetric(),
                    spd: g.spec.spd(),
                    shifts: g.shifts.clone(),
                });
            }
        }
        Ok(out)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_system(s: &SystemSpec, base: &Path) -> Result<System> {
    let MatrixSource::Path(p) = &s.matrix;
    let a = read_matrix_market(resolve(base, p))?;
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    let b = match &s.rhs {
        RhsSource::Ones => vec![1.0; n],
        RhsSource::Random { seed } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
        RhsSource::Path(p) => {
            let m = read_matrix_market(resolve(base, p))?;
            if m.nrows() != n || m.ncols() != 1 {
                return Err(Error::InvalidInput(format!(
                    "rhs is {}x{}, expected {n}x1",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let mut b = vec![0.0; n];
            for (i, _, v) in m.triplets() {
                b[i] = v;
            }
            b
        }
    };
    Ok(System {
        a,
        b,
        symmetric: s.symmetric,
        spd: s.spd,
        shifts: s.shifts.clone(),
    })
}
