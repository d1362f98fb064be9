//! C ABI over the recyklos solvers.
//!
//! Every fallible function returns an [`RkStatus`]; on anything but
//! `RK_STATUS_OK`/`RK_STATUS_NOT_CONVERGED` a message is available from [`rk_last_error`]
//! on the same thread. Matrices and sessions are opaque handles owned by the
//! caller and released with their `_free` function. Panics never cross the
//! boundary: they surface as `RK_STATUS_PANIC`.

use recyklos::driver::{emit_report, run_sequence, ReportFormat, RunOptions, SequenceManifest, Session, System};
use recyklos::error::Error;
use recyklos::sparse::{read_matrix_market, CsrMatrix, LinearOperator};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Ok = 0,
    /// The call completed but at least one solve missed its tolerance.
    NotConverged = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    Panic = 6,
}

/// The system is symmetric (`rk_session_solve*` flags).
pub const RK_SYMMETRIC: u32 = 1;
/// The system is symmetric positive definite; implies [`RK_SYMMETRIC`].
pub const RK_SPD: u32 = 2;

/// Why an iteration stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkTermination {
    Tolerance = 0,
    MaxIter = 1,
    Breakdown = 2,
    Failed = 3,
}

/// Per-solve summary.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RkSolveInfo {
    pub iterations: usize,
    pub matvecs: usize,
    pub recycle_dim: usize,
    pub initial_resnorm: f64,
    pub final_resnorm: f64,
    pub converged: bool,
    pub termination: RkTermination,
}

/// Opaque sparse matrix.
pub struct RkMatrix(CsrMatrix);

/// Opaque solver session: carries the recycle space between solves.
pub struct RkSession(Session);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RkStatus {
    match e {
        Error::Io { .. } => RkStatus::Io,
        Error::Parse { .. } | Error::UnsupportedFormat(_) | Error::Json(_) => RkStatus::Parse,
        Error::InvalidInput(_) | Error::NotSymmetric { .. } | Error::NotPositiveDefinite { .. } => {
            RkStatus::InvalidArgument
        }
        Error::System { source, .. } => status_of(source),
        _ => RkStatus::Numerical,
    }
}

fn fail(status: RkStatus, msg: &str) -> RkStatus {
    set_error(msg);
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<RkStatus, RkStatus>) -> RkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) | Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(RkStatus::Panic, &format!("panic: {msg}"))
        }
    }
}

fn lib(e: Error) -> RkStatus {
    fail(status_of(&e), &e.to_string())
}

fn invalid(msg: &str) -> RkStatus {
    fail(RkStatus::InvalidArgument, msg)
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RkStatus> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], RkStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut_arg<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], RkStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn put<T>(out: *mut *mut T, value: T) -> Result<RkStatus, RkStatus> {
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(RkStatus::Ok)
}

/// Message for the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn rk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a matrix from `nnz` zero-based (row, col, value) triplets;
/// duplicates are summed.
///
/// # Safety
/// `rows`, `cols`, `vals` point to `nnz` elements; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rk_matrix_from_triplets(
    nrows: usize,
    ncols: usize,
    nnz: usize,
    rows: *const usize,
    cols: *const usize,
    vals: *const f64,
    out: *mut *mut RkMatrix,
) -> RkStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let (r, c, v) = (
            slice_arg(rows, nnz, "rows")?,
            slice_arg(cols, nnz, "cols")?,
            slice_arg(vals, nnz, "vals")?,
        );
        let t = (0..nnz).map(|i| (r[i], c[i], v[i])).collect();
        put(out, RkMatrix(CsrMatrix::from_triplets(nrows, ncols, t).map_err(lib)?))
    })
}

/// Reads a Matrix Market coordinate file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rk_matrix_read_mtx(path: *const c_char, out: *mut *mut RkMatrix) -> RkStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let path = str_arg(path, "path")?;
        put(out, RkMatrix(read_matrix_market(Path::new(path)).map_err(lib)?))
    })
}

/// # Safety
/// `m` is a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rk_matrix_nrows(m: *const RkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.nrows())
}

/// # Safety
/// `m` is a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rk_matrix_ncols(m: *const RkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.ncols())
}

/// Stored entries.
///
/// # Safety
/// `m` is a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rk_matrix_nnz(m: *const RkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.nnz())
}

/// `y = A x`, with `x` of length ncols and `y` of length nrows.
///
/// # Safety
/// `m` is a live handle; `x` and `y` have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rk_matrix_apply(m: *const RkMatrix, x: *const f64, y: *mut f64) -> RkStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| invalid("matrix is null"))?;
        let x = slice_arg(x, m.0.ncols(), "x")?;
        let y = slice_mut_arg(y, m.0.nrows(), "y")?;
        m.0.apply(x, y);
        Ok(RkStatus::Ok)
    })
}

/// # Safety
/// `m` is a handle from this library or null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rk_matrix_free(m: *mut RkMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Creates a session from manifest-shaped JSON: `solver`, `selector`,
/// `warm_start`, `recycle_across_systems`. Listed systems are ignored.
///
/// # Safety
/// `config_json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rk_session_new(config_json: *const c_char, out: *mut *mut RkSession) -> RkStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let text = str_arg(config_json, "config_json")?;
        put(out, RkSession(Session::from_json(text, &RunOptions::default()).map_err(lib)?))
    })
}

/// Systems solved so far.
///
/// # Safety
/// `s` is a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rk_session_len(s: *const RkSession) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `s` is a handle from this library or null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rk_session_free(s: *mut RkSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

fn info_of(r: &recyklos::driver::ConvergenceRecord) -> RkSolveInfo {
    use recyklos::driver::RecordTermination as T;
    RkSolveInfo {
        iterations: r.iterations,
        matvecs: r.matvecs,
        recycle_dim: r.recycle_dim,
        initial_resnorm: r.initial_resnorm,
        final_resnorm: r.resnorms.last().copied().unwrap_or(f64::NAN),
        converged: r.converged,
        termination: match r.termination {
            T::Tolerance => RkTermination::Tolerance,
            T::MaxIter => RkTermination::MaxIter,
            T::Breakdown => RkTermination::Breakdown,
            T::Failed => RkTermination::Failed,
        },
    }
}

/// Shared body of the two solve entry points.
unsafe fn session_solve(
    s: *mut RkSession,
    a: *const RkMatrix,
    b: *const f64,
    flags: u32,
    shifts: Option<Vec<f64>>,
    x_out: *mut f64,
    info_out: *mut RkSolveInfo,
) -> Result<RkStatus, RkStatus> {
    let s = s.as_mut().ok_or_else(|| invalid("session is null"))?;
    let a = a.as_ref().ok_or_else(|| invalid("matrix is null"))?;
    let n = a.0.nrows();
    let count = shifts.as_ref().map_or(1, Vec::len);
    let b = slice_arg(b, n, "b")?.to_vec();
    let x_out = slice_mut_arg(x_out, n * count, "x_out")?;
    let sys = System {
        a: a.0.clone(),
        b,
        symmetric: flags & (RK_SYMMETRIC | RK_SPD) != 0,
        spd: flags & RK_SPD != 0,
        shifts,
    };
    let step = s.0.solve(&sys).map_err(lib)?;
    if !info_out.is_null() {
        let infos = std::slice::from_raw_parts_mut(info_out, count);
        for (slot, r) in infos.iter_mut().zip(&step.records) {
            *slot = info_of(r);
        }
    }
    let mut status = RkStatus::Ok;
    for (i, (r, x)) in step.records.iter().zip(&step.solutions).enumerate() {
        let dst = &mut x_out[i * n..(i + 1) * n];
        match x {
            Some(x) => dst.copy_from_slice(x),
            None => dst.fill(f64::NAN),
        }
        if let Some(e) = &r.error {
            set_error(e);
        }
        if !r.converged {
            status = RkStatus::NotConverged;
        }
    }
    Ok(status)
}

/// Solves `A x = b` as the next system of the session. `flags` combines
/// [`RK_SYMMETRIC`] and [`RK_SPD`]; the symmetric solvers require them.
/// `x_out` has length n; `info_out` may be null.
///
/// Returns `RK_STATUS_NOT_CONVERGED` if the tolerance was missed, with the last
/// iterate in `x_out`. If the solver itself failed, `x_out` is NaN and
/// `rk_last_error` names the reason.
///
/// # Safety
/// Handles are live; `b` and `x_out` hold n values; `info_out` is writable
/// or null.
#[no_mangle]
pub unsafe extern "C" fn rk_session_solve(
    s: *mut RkSession,
    a: *const RkMatrix,
    b: *const f64,
    flags: u32,
    x_out: *mut f64,
    info_out: *mut RkSolveInfo,
) -> RkStatus {
    guard(|| session_solve(s, a, b, flags, None, x_out, info_out))
}

/// Solves the family `(A + shift_i I) x_i = b` over one shared basis. The
/// shifts must include 0 and be distinct, and the matrix must be
/// symmetric. `x_out` holds `nshifts` solutions of length n one after
/// another; `info_out` holds `nshifts` entries or is null.
///
/// # Safety
/// Handles are live; `b` holds n values, `shifts` nshifts values, `x_out`
/// n * nshifts values; `info_out` is writable for nshifts entries or null.
#[no_mangle]
pub unsafe extern "C" fn rk_session_solve_shifted(
    s: *mut RkSession,
    a: *const RkMatrix,
    b: *const f64,
    shifts: *const f64,
    nshifts: usize,
    x_out: *mut f64,
    info_out: *mut RkSolveInfo,
) -> RkStatus {
    guard(|| {
        if nshifts == 0 {
            return Err(invalid("no shifts given"));
        }
        let shifts = slice_arg(shifts, nshifts, "shifts")?.to_vec();
        session_solve(s, a, b, RK_SYMMETRIC, Some(shifts), x_out, info_out)
    })
}

/// Runs a manifest file and writes its JSON report, like `recyklos solve`.
/// Returns `RK_STATUS_NOT_CONVERGED` if any system missed its tolerance.
///
/// # Safety
/// Both arguments are NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn rk_run_manifest(manifest_path: *const c_char, report_path: *const c_char) -> RkStatus {
    guard(|| {
        let manifest_path = Path::new(str_arg(manifest_path, "manifest_path")?);
        let report_path = Path::new(str_arg(report_path, "report_path")?);
        let m = SequenceManifest::from_path(manifest_path).map_err(lib)?;
        let base = manifest_path.parent().unwrap_or(Path::new(""));
        let records = run_sequence(&m, base, &RunOptions::default()).map_err(lib)?;
        emit_report(&records, ReportFormat::Json, report_path).map_err(lib)?;
        Ok(if records.iter().all(|r| r.converged) { RkStatus::Ok } else { RkStatus::NotConverged })
    })
}
