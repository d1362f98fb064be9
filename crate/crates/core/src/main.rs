use clap::{Parser, Subcommand, ValueEnum};
use recyklos::driver::{
    emit_report, generate_sequence, run_sequence, verify, GeneratorKind, GeneratorSpec, MatrixSource,
    ReportFormat, RhsSource, RunOptions, SequenceManifest, SolverConfig, SolverKind, SystemSpec,
};
use recyklos::error::{Error, Result};
use recyklos::selection::{SelectorKind, SelectorSpec};
use recyklos::sparse::{write_matrix_market, CsrMatrix};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "recyklos", version, about = "Recycling Krylov solvers for sequences of sparse systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every system of a manifest in order and write a report.
    Solve {
        #[arg(long)]
        manifest: PathBuf,
        /// JSON report.
        #[arg(long)]
        out: PathBuf,
        /// Also write the residual histories as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Report zero wall time so that reports are reproducible byte for byte.
        #[arg(long)]
        no_timing: bool,
    },
    /// Write a generated sequence as Matrix Market files plus a manifest.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0.05)]
        perturb: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant checks on every system of a manifest.
    Verify {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Laplacian2d,
    #[value(name = "diag_perturb")]
    DiagPerturb,
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn solve(manifest: &Path, out: &Path, csv: Option<&Path>, no_timing: bool) -> Result<bool> {
    let m = SequenceManifest::from_path(manifest)?;
    let opts = RunOptions {
        timing: !no_timing,
        ..RunOptions::default()
    };
    let records = run_sequence(&m, &base_dir(manifest), &opts)?;
    emit_report(&records, ReportFormat::Json, out)?;
    if let Some(csv) = csv {
        emit_report(&records, ReportFormat::Csv, csv)?;
    }
    for r in &records {
        let shift = r.shift.map(|g| format!(" shift {g}")).unwrap_or_default();
        let last = r.resnorms.last().copied().unwrap_or(f64::NAN);
        eprintln!(
            "system {}{shift}: {:?}, {} iterations, {} matvecs, residual {last:.3e}, recycle dim {}",
            r.system, r.termination, r.iterations, r.matvecs, r.recycle_dim
        );
        if let Some(e) = &r.error {
            eprintln!("  error: {e}");
        }
    }
    Ok(records.iter().all(|r| r.converged))
}

fn gen(kind: Kind, n: usize, count: usize, perturb: f64, seed: u64, out: &Path) -> Result<()> {
    let spec = GeneratorSpec {
        kind: match kind {
            Kind::Laplacian2d => GeneratorKind::Laplacian2d,
            Kind::DiagPerturb => GeneratorKind::DiagPerturb,
        },
        n,
        count,
        perturbation: perturb,
        seed,
    };
    let seq = generate_sequence(&spec)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let rhs = CsrMatrix::from_triplets(n, 1, seq.rhs.iter().enumerate().map(|(i, &v)| (i, 0, v)).collect())?;
    write_matrix_market(out.join("rhs.mtx"), &rhs)?;
    let mut systems = Vec::with_capacity(count);
    for (i, a) in seq.matrices.iter().enumerate() {
        let name = format!("system_{i:03}.mtx");
        write_matrix_market(out.join(&name), a)?;
        systems.push(SystemSpec {
            matrix: MatrixSource::Path(name.into()),
            rhs: RhsSource::Path("rhs.mtx".into()),
            symmetric: spec.symmetric(),
            spd: spec.spd(),
            shifts: None,
        });
    }
    let (solver, selector) = if spec.spd() {
        (SolverKind::Rcg, SelectorKind::Ritz)
    } else {
        (SolverKind::Rgmres, SelectorKind::HarmonicRitz)
    };
    let manifest = SequenceManifest {
        systems,
        generate: None,
        solver: SolverConfig {
            kind: solver,
            restart: 50,
            tol: 1e-8,
            maxit: 5000,
            variant: None,
            shifted_form: None,
        },
        selector: SelectorSpec::new(selector, 10),
        warm_start: false,
        recycle_across_systems: true,
    };
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    eprintln!("wrote {count} systems and {}", path.display());
    Ok(())
}

fn run_verify(manifest: &Path) -> Result<bool> {
    let m = SequenceManifest::from_path(manifest)?;
    let checks = verify(&m, &base_dir(manifest))?;
    for c in &checks {
        let tag = if c.passed { "pass" } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{tag}  {}", c.name);
        } else {
            println!("{tag}  {} ({})", c.name, c.detail);
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(failed == 0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve {
            manifest,
            out,
            csv,
            no_timing,
        } => solve(manifest, out, csv.as_deref(), *no_timing),
        Command::Gen {
            kind,
            n,
            count,
            perturb,
            seed,
            out,
        } => gen(*kind, *n, *count, *perturb, *seed, out).map(|()| true),
        Command::Verify { manifest } => run_verify(manifest),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
