use recyklos_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rk_last_error()) }.to_string_lossy().into_owned()
}

/// Symmetric tridiagonal `[-1, d, -1]`.
fn tridiag(n: usize, d: f64) -> *mut RkMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, d));
        if i > 0 {
            t.push((i, i - 1, -1.0));
            t.push((i - 1, i, -1.0));
        }
    }
    let rows: Vec<usize> = t.iter().map(|e| e.0).collect();
    let cols: Vec<usize> = t.iter().map(|e| e.1).collect();
    let vals: Vec<f64> = t.iter().map(|e| e.2).collect();
    let mut m = ptr::null_mut();
    let st = unsafe { rk_matrix_from_triplets(n, n, t.len(), rows.as_ptr(), cols.as_ptr(), vals.as_ptr(), &mut m) };
    assert_eq!(st, RkStatus::Ok, "{}", last_error());
    m
}

fn session(json: &str) -> *mut RkSession {
    let c = CString::new(json).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rk_session_new(c.as_ptr(), &mut s) }, RkStatus::Ok, "{}", last_error());
    s
}

fn residual(a: *const RkMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; b.len()];
    assert_eq!(unsafe { rk_matrix_apply(a, x.as_ptr(), ax.as_mut_ptr()) }, RkStatus::Ok);
    b.iter().zip(&ax).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[test]
fn session_solves_and_recycles() {
    let n = 150;
    let s = session(r#"{"solver": {"kind": "rcg", "tol": 1e-10}, "selector": {"kind": "ritz", "k": 5},
                        "recycle_across_systems": true}"#);
    let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut iters = Vec::new();
    for k in 0..3 {
        let a = tridiag(n, 2.0 + 0.01 * k as f64);
        let mut x = vec![0.0; n];
        let mut info = std::mem::MaybeUninit::<RkSolveInfo>::uninit();
        let st = unsafe { rk_session_solve(s, a, b.as_ptr(), RK_SPD, x.as_mut_ptr(), info.as_mut_ptr()) };
        assert_eq!(st, RkStatus::Ok, "{}", last_error());
        let info = unsafe { info.assume_init() };
        assert!(info.converged && info.termination == RkTermination::Tolerance);
        assert!(residual(a, &x, &b) <= 1.1e-10 * bn);
        assert_eq!(info.recycle_dim > 0, k > 0);
        iters.push(info.iterations);
        unsafe { rk_matrix_free(a) };
    }
    assert!(iters[1] < iters[0] && iters[2] < iters[0], "{iters:?}");
    assert_eq!(unsafe { rk_session_len(s) }, 3);
    unsafe { rk_session_free(s) };
}

#[test]
fn shifted_family_writes_one_solution_per_shift() {
    let n = 80;
    let s = session(r#"{"solver": {"kind": "rminres", "tol": 1e-10, "restart": 100, "maxit": 100}}"#);
    let a = tridiag(n, 2.5);
    let b = vec![1.0; n];
    let shifts = [0.0, 0.5, 3.0];
    let mut x = vec![0.0; n * shifts.len()];
    let mut info = vec![
        RkSolveInfo {
            iterations: 0,
            matvecs: 0,
            recycle_dim: 0,
            initial_resnorm: 0.0,
            final_resnorm: 0.0,
            converged: false,
            termination: RkTermination::Failed,
        };
        3
    ];
    let st = unsafe {
        rk_session_solve_shifted(s, a, b.as_ptr(), shifts.as_ptr(), 3, x.as_mut_ptr(), info.as_mut_ptr())
    };
    assert_eq!(st, RkStatus::Ok, "{}", last_error());
    for (i, g) in shifts.iter().enumerate() {
        let xi = &x[i * n..(i + 1) * n];
        // (A + g I) x = b
        let mut ax = vec![0.0; n];
        unsafe { rk_matrix_apply(a, xi.as_ptr(), ax.as_mut_ptr()) };
        let r = (0..n).map(|j| (b[j] - ax[j] - g * xi[j]).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-9 * (n as f64).sqrt(), "shift {g}: {r}");
        assert!(info[i].converged);
    }
    unsafe {
        rk_matrix_free(a);
        rk_session_free(s);
    }
}

#[test]
fn errors_map_to_codes() {
    let mut m = ptr::null_mut();
    // out-of-range triplet
    let (r, c, v) = ([5usize], [0usize], [1.0]);
    assert_eq!(
        unsafe { rk_matrix_from_triplets(2, 2, 1, r.as_ptr(), c.as_ptr(), v.as_ptr(), &mut m) },
        RkStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    let missing = CString::new("/nonexistent/m.mtx").unwrap();
    assert_eq!(unsafe { rk_matrix_read_mtx(missing.as_ptr(), &mut m) }, RkStatus::Io);
    assert!(last_error().contains("nonexistent"));

    let bad = CString::new("{ nope").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rk_session_new(bad.as_ptr(), &mut s) }, RkStatus::Parse);
    assert_eq!(unsafe { rk_session_new(ptr::null(), &mut s) }, RkStatus::InvalidArgument);

    // a CG session refuses a system not declared SPD, without advancing
    let s = session(r#"{"solver": {"kind": "cg"}}"#);
    let a = tridiag(10, 3.0);
    let b = [1.0; 10];
    let mut x = vec![0.0; 10];
    let st = unsafe { rk_session_solve(s, a, b.as_ptr(), 0, x.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, RkStatus::InvalidArgument);
    assert_eq!(unsafe { rk_session_len(s) }, 0);
    assert_eq!(unsafe { rk_matrix_nrows(ptr::null()) }, 0);
    unsafe {
        rk_matrix_free(a);
        rk_session_free(s);
        rk_matrix_free(ptr::null_mut());
    }
}

#[test]
fn unconverged_solves_report_status_and_last_iterate() {
    let n = 100;
    let s = session(r#"{"solver": {"kind": "cg", "tol": 1e-12, "maxit": 3}}"#);
    let a = tridiag(n, 2.0);
    let b = vec![1.0; n];
    let mut x = vec![f64::NAN; n];
    let mut info = std::mem::MaybeUninit::<RkSolveInfo>::uninit();
    let st = unsafe { rk_session_solve(s, a, b.as_ptr(), RK_SPD, x.as_mut_ptr(), info.as_mut_ptr()) };
    assert_eq!(st, RkStatus::NotConverged);
    let info = unsafe { info.assume_init() };
    assert_eq!((info.iterations, info.termination), (3, RkTermination::MaxIter));
    // the returned iterate is the one the final residual describes
    assert!((residual(a, &x, &b) - info.final_resnorm).abs() <= 1e-10 * (n as f64).sqrt());
    unsafe {
        rk_matrix_free(a);
        rk_session_free(s);
    }
}

#[test]
fn run_manifest_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.json");
    std::fs::write(
        &manifest,
        r#"{"generate": {"kind": "laplacian2d", "n": 100, "count": 2, "perturbation": 0.05, "seed": 1},
            "solver": {"kind": "rcg", "tol": 1e-8}, "selector": {"kind": "ritz", "k": 4},
            "recycle_across_systems": true}"#,
    )
    .unwrap();
    let report = dir.path().join("r.json");
    let (m, r) = (
        CString::new(manifest.to_str().unwrap()).unwrap(),
        CString::new(report.to_str().unwrap()).unwrap(),
    );
    assert_eq!(unsafe { rk_run_manifest(m.as_ptr(), r.as_ptr()) }, RkStatus::Ok, "{}", last_error());
    let recs = recyklos::driver::records_from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r.converged));
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(rk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
