use std::path::PathBuf;

/// Errors produced by the solvers, kernels, and drivers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("iteration failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("ill-conditioned pencil (condition estimate {cond:.3e})")]
    IllConditionedPencil { cond: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("operator declared symmetric failed the symmetry spot-check (|u'Av - v'Au| = {defect:.3e})")]
    NotSymmetric { defect: f64 },

    #[error("operator declared positive definite produced v'Av = {curvature:.3e}")]
    NotPositiveDefinite { curvature: f64 },

    #[error("recycle space is empty after rank reduction")]
    EmptyRecycleSpace,

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("system {index}: {source}")]
    System {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
