//! Batch driver: solves a sequence of systems in order, carrying the initial
//! guess and the recycle space from one system to the next.

mod generate;
mod manifest;
mod report;

pub use generate::{generate_sequence, GeneratedSequence, GeneratorKind, GeneratorSpec};
pub use manifest::{
    GeneratedSystems, MatrixSource, RhsSource, SequenceManifest, ShiftedFormConfig, SolverConfig, SolverKind,
    System, SystemSpec,
};
pub use report::{
    emit_report, records_from_json, records_to_csv, records_to_json, ConvergenceRecord, RecordTermination,
    ReportFormat,
};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::krylov::{cg, fom, gmres, minres, SolveReport, SolverParams};
use crate::recycle::{prepare_recycle, RecycleSpace, Variant};
use crate::selection::{pod_select, previous_solutions_select, SelectorKind};
use crate::solvers::{rcg, rfom, rgmres_gcrodr, rminres, solve_shifted_family, ShiftedFamily, ShiftedForm};
use crate::sparse::{check_positive, LinearOperator};
use crate::vector;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Record wall time; off gives byte-identical reports across runs.
    pub timing: bool,
    pub debug_checks: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            timing: true,
            debug_checks: crate::krylov::debug_checks_from_env(),
        }
    }
}

/// What one system produced.
struct SystemOutcome {
    solves: Vec<(Option<f64>, Result<SolveReport>)>,
    rs: RecycleSpace,
    wall_ms: f64,
}

/// Carried state between systems.
struct Carry {
    x_prev: Option<Vec<f64>>,
    next_u: Option<DenseMatrix>,
    history: Vec<Vec<f64>>,
}

fn recycle_space_for(manifest: &SequenceManifest, sys: &System, carry: &Carry) -> RecycleSpace {
    let n = sys.a.nrows();
    let kind = manifest.solver.kind;
    let variant = kind.variant(manifest.solver.variant);
    let empty = || RecycleSpace::empty(n, variant);
    let usable = sys.shifts.is_some() || kind.recycles();
    if !manifest.recycle_across_systems || !usable || manifest.selector.k == 0 {
        return empty();
    }
    let history: Vec<Vec<f64>> = carry.history.iter().filter(|x| x.len() == n).cloned().collect();
    let k = manifest.selector.k;
    let raw = match manifest.selector.kind {
        SelectorKind::HarmonicRitz | SelectorKind::Ritz => Ok(carry.next_u.clone()),
        SelectorKind::PodSnapshots if !history.is_empty() => {
            pod_select(&DenseMatrix::from_columns(n, &history), k).map(Some)
        }
        SelectorKind::PreviousSolutions if !history.is_empty() => previous_solutions_select(&history, k).map(Some),
        _ => Ok(None),
    };
    let raw = match raw {
        Ok(Some(u)) if u.nrows() == n && u.ncols() > 0 => u,
        Ok(_) => return empty(),
        Err(e) => {
            log::warn!("recycle selection failed: {e}; continuing without recycling");
            return empty();
        }
    };
    // shifted families use the orthogonal form
    let variant = if sys.shifts.is_some() { Variant::Orthogonal } else { variant };
    match prepare_recycle(&sys.a, &raw, variant) {
        Ok(rs) => rs,
        Err(e) => {
            log::warn!("recycle space could not be prepared: {e}; continuing without recycling");
            empty()
        }
    }
}

fn solve_system(
    manifest: &SequenceManifest,
    sys: &System,
    carry: &mut Carry,
    params: &SolverParams,
) -> SystemOutcome {
    let start = Instant::now();
    let n = sys.a.nrows();
    let rs = recycle_space_for(manifest, sys, carry);
    let setup = rs.setup_matvecs();
    let x0 = if manifest.warm_start {
        carry.x_prev.clone().filter(|x| x.len() == n)
    } else {
        None
    };
    let a: &dyn LinearOperator = &sys.a;
    let b = &sys.b;
    let sel = &manifest.selector;

    let mut solves: Vec<(Option<f64>, Result<SolveReport>)> = Vec::new();
    if let Some(shifts) = &sys.shifts {
        let form = manifest.solver.shifted_form.map_or(ShiftedForm::Right, Into::into);
        let fam = ShiftedFamily::new(a, b.clone(), shifts.clone());
        match fam.and_then(|f| solve_shifted_family(&f, &rs, params, form)) {
            Ok(list) => {
                for (g, r) in shifts.iter().zip(list) {
                    solves.push((Some(*g), r.map(|s| s.report)));
                }
            }
            Err(e) => {
                let msg = e.to_string();
                for g in shifts {
                    solves.push((Some(*g), Err(Error::NumericalFailure(msg.clone()))));
                }
            }
        }
        if let Some((_, Ok(rep))) = solves.iter().find(|(g, _)| *g == Some(0.0)) {
            carry.x_prev = Some(rep.x.clone());
            carry.history.push(rep.x.clone());
        }
    } else {
        let x0 = x0.as_deref();
        let (result, next) = match manifest.solver.kind {
            SolverKind::Gmres => (gmres(a, b, x0, params), None),
            SolverKind::Fom => (fom(a, b, x0, params), None),
            SolverKind::Minres => (minres(a, b, x0, params), None),
            SolverKind::Cg => (cg(a, b, x0, params), None),
            SolverKind::Rfom => (rfom(a, b, x0, &rs, params), None),
            SolverKind::Rgmres => split(rgmres_gcrodr(a, b, x0, &rs, params, sel)),
            SolverKind::Rminres => split(rminres(a, b, x0, &rs, params, sel)),
            SolverKind::Rcg => split(rcg(a, b, x0, &rs, params, sel)),
        };
        if let Ok(rep) = &result {
            carry.x_prev = Some(rep.x.clone());
            carry.history.push(rep.x.clone());
        }
        if let Some(u) = next {
            carry.next_u = Some(u);
        }
        solves.push((None, result));
    }
    for (_, r) in solves.iter_mut() {
        if let Ok(rep) = r {
            rep.matvecs += setup;
        }
    }
    SystemOutcome {
        solves,
        rs,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn split(r: Result<crate::solvers::RecycledSolve>) -> (Result<SolveReport>, Option<DenseMatrix>) {
    match r {
        Ok(s) => (Ok(s.report), s.next.map(|sel| sel.u)),
        Err(e) => (Err(e), None),
    }
}

fn to_records(index: usize, sys: &System, out: &SystemOutcome, timing: bool, x0: Option<&[f64]>) -> Vec<ConvergenceRecord> {
    let wall_ms = if timing { out.wall_ms } else { 0.0 };
    out.solves
        .iter()
        .map(|(shift, r)| match r {
            Ok(rep) => ConvergenceRecord {
                system: index,
                shift: *shift,
                iterations: rep.iterations,
                resnorms: rep.resnorms.clone(),
                matvecs: rep.matvecs,
                recycle_dim: out.rs.k(),
                wall_ms,
                termination: rep.termination.into(),
                initial_resnorm: rep.initial_resnorm,
                converged: rep.converged,
                error: None,
            },
            Err(e) => {
                let r0 = match x0 {
                    Some(x) if shift.is_none() => vector::norm2(&vector::sub(&sys.b, &sys.a.apply_vec(x))),
                    _ => vector::norm2(&sys.b),
                };
                ConvergenceRecord {
                    system: index,
                    shift: *shift,
                    iterations: 0,
                    resnorms: Vec::new(),
                    matvecs: 0,
                    recycle_dim: out.rs.k(),
                    wall_ms,
                    termination: RecordTermination::Failed,
                    initial_resnorm: r0,
                    converged: false,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect()
}

fn params_for(manifest: &SequenceManifest, opts: &RunOptions) -> SolverParams {
    SolverParams {
        debug_checks: opts.debug_checks,
        ..manifest.solver.params()
    }
}

/// Solves every system in order. Unloadable input aborts with the failing
/// system's index; solver failures are recorded and the run continues.
pub fn run_sequence(manifest: &SequenceManifest, base: &Path, opts: &RunOptions) -> Result<Vec<ConvergenceRecord>> {
    let systems = manifest.load(base)?;
    Ok(run_loaded(manifest, &systems, opts))
}

/// [`run_sequence`] on already loaded systems.
pub fn run_loaded(manifest: &SequenceManifest, systems: &[System], opts: &RunOptions) -> Vec<ConvergenceRecord> {
    let mut session = Session::unchecked(manifest.clone(), opts);
    systems.iter().flat_map(|sys| session.step(sys).records).collect()
}

/// What [`Session::solve`] returns: one record per solve (one per shift for
/// a shifted family) and the matching solution, absent when the solve failed.
#[derive(Debug, Clone)]
pub struct SessionStep {
    pub records: Vec<ConvergenceRecord>,
    pub solutions: Vec<Option<Vec<f64>>>,
}

/// A sequence solved one system at a time, for callers that produce the
/// next matrix only after seeing the previous solution. Carries the same
/// state as [`run_sequence`]; the manifest's `systems` and `generate` entries
/// are ignored.
pub struct Session {
    manifest: SequenceManifest,
    params: SolverParams,
    timing: bool,
    carry: Carry,
    index: usize,
}

impl Session {
    pub fn new(manifest: SequenceManifest, opts: &RunOptions) -> Result<Self> {
        manifest.selector.validate()?;
        if !(manifest.solver.tol > 0.0) || manifest.solver.restart == 0 {
            return Err(Error::InvalidInput("solver needs tol > 0 and restart > 0".into()));
        }
        Ok(Self::unchecked(manifest, opts))
    }

    /// A session from manifest-shaped JSON; `systems` may be omitted.
    pub fn from_json(text: &str, opts: &RunOptions) -> Result<Self> {
        Self::new(serde_json::from_str(text)?, opts)
    }

    fn unchecked(manifest: SequenceManifest, opts: &RunOptions) -> Self {
        Self {
            params: params_for(&manifest, opts),
            manifest,
            timing: opts.timing,
            carry: Carry {
                x_prev: None,
                next_u: None,
                history: Vec::new(),
            },
            index: 0,
        }
    }

    /// Number of systems solved so far.
    pub fn len(&self) -> usize {
        self.index
    }

    pub fn is_empty(&self) -> bool {
        self.index == 0
    }

    /// Solves the next system. Declarations that do not fit the solver and
    /// malformed systems are rejected without advancing the sequence; solver
    /// failures are reported in the records.
    pub fn solve(&mut self, sys: &System) -> Result<SessionStep> {
        let n = sys.a.nrows();
        if sys.a.ncols() != n || sys.b.len() != n || n == 0 {
            return Err(Error::InvalidInput(format!(
                "system needs a nonempty square matrix and a matching rhs (got {}x{}, rhs {})",
                n,
                sys.a.ncols(),
                sys.b.len()
            )));
        }
        self.manifest
            .check_flags(sys.symmetric, sys.spd, sys.shifts.is_some())
            .map_err(|msg| Error::InvalidInput(msg.into()))?;
        if let Some(x) = &self.carry.x_prev {
            if x.len() != n {
                // a new problem size: nothing carried over applies
                self.carry.x_prev = None;
                self.carry.next_u = None;
            }
        }
        Ok(self.step(sys))
    }

    fn step(&mut self, sys: &System) -> SessionStep {
        let x0 = if self.manifest.warm_start { self.carry.x_prev.clone() } else { None };
        let out = solve_system(&self.manifest, sys, &mut self.carry, &self.params);
        log::info!("system {}: {} solve(s), recycle dim {}", self.index, out.solves.len(), out.rs.k());
        let records = to_records(self.index, sys, &out, self.timing, x0.as_deref());
        self.index += 1;
        let solutions = out.solves.into_iter().map(|(_, r)| r.ok().map(|rep| rep.x)).collect();
        SessionStep { records, solutions }
    }
}

/// One line of `recyklos verify`.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: String, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

/// Runs the sequence with per-iteration checks on and evaluates the
/// structural invariants of every system, solve, and recycle space.
pub fn verify(manifest: &SequenceManifest, base: &Path) -> Result<Vec<CheckOutcome>> {
    let systems = manifest.load(base)?;
    let opts = RunOptions {
        timing: false,
        debug_checks: true,
    };
    let params = params_for(manifest, &opts);
    let mut carry = Carry {
        x_prev: None,
        next_u: None,
        history: Vec::new(),
    };
    let mut checks = Vec::new();
    let kind = manifest.solver.kind;
    for (i, sys) in systems.iter().enumerate() {
        let bnorm = vector::norm2(&sys.b);
        if sys.symmetric {
            let ok = sys.a.is_symmetric();
            checks.push(outcome(format!("system {i}: declared symmetric"), ok, String::new()));
        }
        if sys.spd {
            let r = check_positive(&sys.a, 8, 0x5107);
            checks.push(outcome(
                format!("system {i}: declared spd (spot check)"),
                r.is_ok(),
                r.err().map(|e| e.to_string()).unwrap_or_default(),
            ));
        }
        let out = solve_system(manifest, sys, &mut carry, &params);
        let rs = &out.rs;
        if rs.k() > 0 {
            let c = rs.c_matrix();
            let defect = rs.image_defect(&sys.a) / c.frobenius_norm().max(f64::MIN_POSITIVE);
            checks.push(outcome(
                format!("system {i}: recycle image C = A U"),
                defect <= 1e-10,
                format!("relative defect {defect:.2e}"),
            ));
            let (name, m) = match rs.variant() {
                Variant::Galerkin => ("U^T A U = I", rs.u_matrix().tr_matmul(&c)),
                _ => ("C^T C = I", c.tr_matmul(&c)),
            };
            let d = m.sub(&DenseMatrix::identity(rs.k())).max_abs();
            checks.push(outcome(format!("system {i}: recycle normalization {name}"), d <= 1e-10, format!("{d:.2e}")));
        }
        for (shift, res) in &out.solves {
            let tag = match shift {
                Some(g) => format!("system {i} shift {g}"),
                None => format!("system {i}"),
            };
            let rep = match res {
                Ok(rep) => rep,
                Err(e) => {
                    checks.push(outcome(format!("{tag}: solve"), false, e.to_string()));
                    continue;
                }
            };
            let g = shift.unwrap_or(0.0);
            let mut ax = sys.a.apply_vec(&rep.x);
            vector::axpy(g, &rep.x, &mut ax);
            let true_res = vector::norm2(&vector::sub(&sys.b, &ax));
            let target = manifest.solver.tol * bnorm;
            checks.push(outcome(
                format!("{tag}: converged with true residual within tolerance"),
                rep.converged && true_res <= target * (1.0 + 1e-6) + 1e-14 * bnorm,
                format!("{true_res:.3e} vs {target:.3e} after {} iterations", rep.iterations),
            ));
            if let Some(d) = rep.identity_discrepancy {
                checks.push(outcome(
                    format!("{tag}: residual identity"),
                    d <= 1e-8 * bnorm,
                    format!("max discrepancy {d:.2e}"),
                ));
            }
            let min_res = matches!(kind, SolverKind::Gmres | SolverKind::Minres | SolverKind::Rminres)
                || shift.is_some()
                || (kind == SolverKind::Rgmres && rs.variant() == Variant::Orthogonal);
            if min_res {
                let ok = rep.resnorms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-14 * bnorm);
                checks.push(outcome(format!("{tag}: residual norms nonincreasing"), ok, String::new()));
            }
            if rs.k() > 0 && matches!(kind, SolverKind::Rfom | SolverKind::Rcg) && shift.is_none() {
                let r = vector::sub(&sys.b, &ax);
                let ut = rs.u_matrix().tr_matvec(&r);
                let v = vector::norm2(&ut);
                checks.push(outcome(
                    format!("{tag}: residual orthogonal to U"),
                    v <= 1e-8 * bnorm,
                    format!("{v:.2e}"),
                ));
            }
        }
    }
    Ok(checks)
}
