use crate::error::{Error, Result};
use crate::krylov::Termination;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordTermination {
    Tolerance,
    MaxIter,
    Breakdown,
    /// The solver returned an error; see `error`.
    Failed,
}

impl From<Termination> for RecordTermination {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Tolerance => Self::Tolerance,
            Termination::MaxIter => Self::MaxIter,
            Termination::Breakdown => Self::Breakdown,
        }
    }
}

/// One solve in a sequence (one shift of a family counts as one solve).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub system: usize,
    pub shift: Option<f64>,
    /// Iterations performed.
    #[serde(rename = "iter")]
    pub iterations: usize,
    /// Residual norm history, entry `j` after iteration `j`.
    #[serde(rename = "resnorm")]
    pub resnorms: Vec<f64>,
    /// Operator applications, including recycle-space setup.
    pub matvecs: usize,
    pub recycle_dim: usize,
    pub wall_ms: f64,
    pub termination: RecordTermination,
    pub initial_resnorm: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// CSV with one row per residual-history entry:
/// `system,shift,iter,resnorm,matvecs` (`matvecs` is the record total, and
/// `shift` is empty for unshifted solves).
pub fn records_to_csv(records: &[ConvergenceRecord]) -> String {
    let mut s = String::from("system,shift,iter,resnorm,matvecs\n");
    for r in records {
        let shift = r.shift.map(|g| g.to_string()).unwrap_or_default();
        for (j, res) in r.resnorms.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{:e},{}", r.system, shift, j, res, r.matvecs);
        }
    }
    s
}

pub fn records_to_json(records: &[ConvergenceRecord]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(records)?;
    s.push('\n');
    Ok(s)
}

pub fn records_from_json(text: &str) -> Result<Vec<ConvergenceRecord>> {
    Ok(serde_json::from_str(text)?)
}

pub fn emit_report(records: &[ConvergenceRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => records_to_csv(records),
        ReportFormat::Json => records_to_json(records)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ConvergenceRecord {
        ConvergenceRecord {
            system: 0,
            shift: None,
            iterations: 0,
            resnorms: vec![0.5],
            matvecs: 1,
            recycle_dim: 0,
            wall_ms: 0.0,
            termination: RecordTermination::Tolerance,
            initial_resnorm: 0.5,
            converged: true,
            error: None,
        }
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(records_to_csv(&[]), "system,shift,iter,resnorm,matvecs\n");
        let csv = records_to_csv(&[record()]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().nth(1).unwrap(), "0,,0,5e-1,1");
        let mut shifted = record();
        shifted.shift = Some(0.5);
        assert!(records_to_csv(&[shifted]).contains("0,0.5,0,"));
    }

    #[test]
    fn json_roundtrip_and_field_names() {
        let mut r = record();
        r.resnorms = vec![1.0, 0.1, 1e-9];
        r.error = Some("x".into());
        let text = records_to_json(&[r.clone(), record()]).unwrap();
        for key in ["\"system\"", "\"shift\"", "\"iter\"", "\"resnorm\"", "\"matvecs\"", "\"recycle_dim\"", "\"wall_ms\"", "\"termination\""] {
            assert!(text.contains(key), "{key}");
        }
        assert_eq!(records_from_json(&text).unwrap(), vec![r, record()]);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = emit_report(&[], ReportFormat::Csv, Path::new("/nonexistent/dir/r.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
