//! Non-recycled Krylov baselines and the building blocks the recycled
//! solvers share with them.

mod arnoldi;
mod cg;
mod gmres;
mod lanczos;
mod minres;

pub use arnoldi::ArnoldiState;
pub use cg::cg;
pub use gmres::{fom, gmres};
pub(crate) use gmres::galerkin_step;
pub use lanczos::{LanczosState, LanczosStep, MinresRecurrence, MinresRotation, WRecurrence};
pub use minres::minres;

use crate::error::{Error, Result};
use crate::sparse::LinearOperator;
use crate::vector;
use serde::{Deserialize, Serialize};

/// Relative threshold for happy breakdown, against the running norm estimate.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// Seed for the symmetry / positivity spot-checks at solver setup.
pub(crate) const SPOT_CHECK_SEED: u64 = 0x5107;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Tolerance,
    MaxIter,
    Breakdown,
}

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// `resnorms[0]` is the residual of the iterate the Krylov phase starts
    /// from (for recycled solvers, after the projection onto the recycle
    /// space); entry `j` follows iteration `j`.
    pub resnorms: Vec<f64>,
    /// `||b - A x0||` for the caller's initial guess.
    pub initial_resnorm: f64,
    pub matvecs: usize,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Iterates `x_0, x_1, ...`, only when requested.
    pub iterates: Vec<Vec<f64>>,
    /// Largest `| ||b - A x_j|| - inner resnorm |` seen, when debug checks ran.
    pub identity_discrepancy: Option<f64>,
}

impl SolveReport {
    pub fn final_resnorm(&self) -> f64 {
        self.resnorms.last().copied().unwrap_or(self.initial_resnorm)
    }
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Restart length for the Arnoldi-based solvers.
    pub restart: usize,
    /// Relative to `||b||`.
    pub tol: f64,
    /// Cap on iterations (matrix-vector products inside the Krylov loop).
    pub maxit: usize,
    pub record_iterates: bool,
    /// Per-iteration residual-identity checks; expensive.
    pub debug_checks: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            restart: 50,
            tol: 1e-8,
            maxit: 1000,
            record_iterates: false,
            debug_checks: debug_checks_from_env(),
        }
    }
}

/// `RECYKLOS_DEBUG_CHECKS=1` turns on per-iteration invariant checks.
pub fn debug_checks_from_env() -> bool {
    std::env::var("RECYKLOS_DEBUG_CHECKS").map(|v| v == "1").unwrap_or(false)
}

pub(crate) fn validate(op: &dyn LinearOperator, b: &[f64], x0: Option<&[f64]>, params: &SolverParams) -> Result<()> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::InvalidInput(format!("rhs has length {} but operator is {n}x{n}", b.len())));
    }
    if let Some(x0) = x0 {
        if x0.len() != n {
            return Err(Error::InvalidInput(format!("x0 has length {} but operator is {n}x{n}", x0.len())));
        }
        if !vector::all_finite(x0) {
            return Err(Error::InvalidInput("x0 has non-finite entries".into()));
        }
    }
    if !vector::all_finite(b) {
        return Err(Error::InvalidInput("rhs has non-finite entries".into()));
    }
    if !(params.tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    if params.restart == 0 {
        return Err(Error::InvalidInput("restart length must be positive".into()));
    }
    Ok(())
}

pub(crate) fn residual(op: &dyn LinearOperator, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = op.apply_vec(x);
    vector::sub(b, &ax)
}

pub(crate) fn check_finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalFailure(format!("non-finite {what}")))
    }
}

/// Tracks the residual-identity discrepancy during debug runs.
pub(crate) struct IdentityCheck {
    pub enabled: bool,
    bound: f64,
    pub max: f64,
}

impl IdentityCheck {
    pub fn new(enabled: bool, bnorm: f64) -> Self {
        Self {
            enabled,
            bound: 1e-8 * bnorm.max(f64::MIN_POSITIVE),
            max: 0.0,
        }
    }

    pub fn observe(&mut self, op: &dyn LinearOperator, b: &[f64], x: &[f64], inner: f64) -> Result<()> {
        let d = crate::recycle::residual_consistency_check(op, b, x, inner);
        self.max = self.max.max(d);
        if d > self.bound {
            return Err(Error::InvariantViolation(format!(
                "residual identity off by {d:.3e} (bound {:.3e})",
                self.bound
            )));
        }
        Ok(())
    }

    pub fn result(&self) -> Option<f64> {
        self.enabled.then_some(self.max)
    }
}
