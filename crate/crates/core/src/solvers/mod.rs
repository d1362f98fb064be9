//! Recycled Krylov solvers.
//!
//! All of them solve `A x = b` over `x0 + span(U) + K_j((I - Q) A, (I - Q) r0)`
//! and share one bookkeeping pattern: each projected basis vector `v` has its
//! image split as `A v = C b + (I - Q) A v`, the coefficient columns `b` are
//! kept (densely or through a short recurrence), and the `U` part of the
//! update is applied once at the end as `U (q(r0) - B y)`.

mod gcrodr;
mod rcg;
mod rminres;
mod shifted;

pub use gcrodr::{rfom, rgmres_gcrodr};
pub use rcg::rcg;
pub use rminres::rminres;
pub use shifted::{solve_shifted_family, ShiftReport, ShiftedFamily, ShiftedForm};

use crate::error::Result;
use crate::krylov::SolveReport;
use crate::recycle::{RecycleSpace, Variant};
use crate::selection::Selected;
use crate::vector;

/// A recycled solve: the report plus the recycle candidate for the next
/// system (raw vectors and their images under this system's operator).
#[derive(Debug, Clone)]
pub struct RecycledSolve {
    pub report: SolveReport,
    pub next: Option<Selected>,
}

/// The same `(U, C)` data under another normalization; no operator
/// applications.
pub(crate) fn with_variant(rs: &RecycleSpace, variant: Variant) -> Result<RecycleSpace> {
    if rs.variant() == variant {
        return Ok(rs.clone());
    }
    if rs.k() == 0 {
        return Ok(RecycleSpace::empty(rs.n(), variant));
    }
    RecycleSpace::from_image(&rs.u_matrix(), &rs.c_matrix(), variant)
}

/// Moves the `Q r` part of the residual into the iterate:
/// `x += U q(r)`, `r -= C q(r)`.
pub(crate) fn project_start(rs: &RecycleSpace, x: &mut [f64], r: Vec<f64>) -> Vec<f64> {
    if rs.k() == 0 {
        return r;
    }
    let (w, coeffs) = rs.apply_q_complement(&r);
    vector::axpy(1.0, &vector::combine(rs.u(), &coeffs, rs.n()), x);
    w
}

/// `x + t + U (q(r0) - acc)`, the deferred recycle correction of the
/// short-recurrence solvers.
pub(crate) fn finish_update(rs: &RecycleSpace, x: &[f64], r0: &[f64], t: &[f64], acc: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    vector::axpy(1.0, t, &mut out);
    if rs.k() > 0 {
        let mut z = rs.q_coefficients(r0);
        vector::axpy(-1.0, acc, &mut z);
        vector::axpy(1.0, &vector::combine(rs.u(), &z, rs.n()), &mut out);
    }
    out
}

/// The current space as a selection, for solves that ended before the
/// selector produced anything.
pub(crate) fn current_as_selection(rs: &RecycleSpace) -> Option<Selected> {
    (rs.k() > 0).then(|| Selected {
        u: rs.u_matrix(),
        au: rs.c_matrix(),
        values: Vec::new(),
    })
}
