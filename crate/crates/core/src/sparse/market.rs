//! Matrix Market coordinate files (real, general or symmetric).

use super::CsrMatrix;
use crate::error::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Reads a coordinate-format Matrix Market file. Symmetric storage is
/// expanded to both triangles; duplicate entries are summed.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub(crate) fn parse(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix banner"));
    }
    if words[2] != "coordinate" {
        return Err(Error::UnsupportedFormat(format!("{} storage", words[2])));
    }
    match words[3].as_str() {
        "real" | "integer" => {}
        other => return Err(Error::UnsupportedFormat(format!("{other} field"))),
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::UnsupportedFormat(format!("{other} symmetry"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(size_line, format!("bad size line: {e}")))?;
    if dims.len() != 3 {
        return Err(parse_err(size_line, "size line needs rows, columns and entry count"));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    if symmetry == Symmetry::Symmetric && nrows != ncols {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }

    let mut entries = Vec::with_capacity(if symmetry == Symmetry::Symmetric { 2 * nnz } else { nnz });
    let mut seen = 0;
    for (line, l) in data {
        if seen == nnz {
            return Err(parse_err(line, "more entries than declared"));
        }
        let mut toks = l.split_whitespace();
        let mut index = |what: &str, bound: usize| -> Result<usize> {
            let t = toks.next().ok_or_else(|| parse_err(line, format!("missing {what} index")))?;
            let v: usize = t.parse().map_err(|_| parse_err(line, format!("bad {what} index '{t}'")))?;
            if v == 0 || v > bound {
                return Err(parse_err(line, format!("{what} index {v} out of range 1..={bound}")));
            }
            Ok(v - 1)
        };
        let i = index("row", nrows)?;
        let j = index("column", ncols)?;
        let t = toks.next().ok_or_else(|| parse_err(line, "missing value"))?;
        let v: f64 = t.parse().map_err(|_| parse_err(line, format!("bad value '{t}'")))?;
        if !v.is_finite() {
            return Err(parse_err(line, "non-finite value"));
        }
        if toks.next().is_some() {
            return Err(parse_err(line, "trailing tokens"));
        }
        entries.push((i, j, v));
        if symmetry == Symmetry::Symmetric && i != j {
            entries.push((j, i, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(parse_err(text.lines().count(), format!("expected {nnz} entries, found {seen}")));
    }
    CsrMatrix::from_triplets(nrows, ncols, entries)
}

/// Writes the matrix in general coordinate form. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(32 * a.nnz() + 64);
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", a.nrows(), a.ncols(), a.nnz()));
    for (i, j, v) in a.triplets() {
        out.push_str(&format!("{} {} {:e}\n", i + 1, j + 1, v));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_file() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1\n2 2 1\n").unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a, CsrMatrix::identity(2));
    }

    #[test]
    fn symmetric_expansion() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 2\n").unwrap();
        assert_eq!(a.nnz(), 4);
        let d = a.to_dense();
        assert_eq!((d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]), (2.0, 1.0, 1.0, 2.0));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 0.5\n1 1 0.5\n").unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.values(), &[1.0]);
    }

    #[test]
    fn unsupported_fields() {
        for field in ["complex", "pattern"] {
            let text = format!("%%MatrixMarket matrix coordinate {field} general\n1 1 1\n1 1 1\n");
            assert!(matches!(parse(&text), Err(Error::UnsupportedFormat(_))));
        }
        assert!(matches!(
            parse("%%MatrixMarket matrix array real general\n1 1\n1\n"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn write_read_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 0.1), (0, 2, -1e-300), (1, 1, std::f64::consts::PI), (2, 0, 7.0e12)],
        )
        .unwrap();
        write_matrix_market(&path, &a).unwrap();
        assert_eq!(read_matrix_market(&path).unwrap(), a);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_matrix_market("/nonexistent/a.mtx"), Err(Error::Io { .. })));
    }
}
