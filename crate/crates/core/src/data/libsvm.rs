use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SigmaError};
use crate::linalg::{Matrix, Vector};
use crate::objective::Dataset;

/// Reads a libsvm file into a dense [`Dataset`]. Labels are kept as written;
/// the logistic model maps `{0, 1}` to `{−1, +1}`.
///
/// `features` overrides the inferred dimension (the largest index seen).
pub fn load_libsvm(path: impl AsRef<Path>, features: Option<usize>) -> Result<Dataset> {
    let text = super::read_text(path.as_ref())?;
    parse_libsvm(&text, features)
}

/// Parses libsvm text: `label idx:val idx:val …` with 1-based ascending
/// indices. Blank lines and `#` comments are skipped.
pub fn parse_libsvm(text: &str, features: Option<usize>) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| SigmaError::Parse { line: line_no, msg: format!("bad label '{label_tok}'") })?;
        let mut entries = Vec::new();
        let mut prev = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| SigmaError::Parse { line: line_no, msg: format!("expected idx:val, got '{tok}'") })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| SigmaError::Parse { line: line_no, msg: format!("bad feature index '{idx}'") })?;
            let val: f64 = val
                .parse()
                .map_err(|_| SigmaError::Parse { line: line_no, msg: format!("bad feature value '{val}'") })?;
            if idx == 0 {
                return Err(SigmaError::Index { line: line_no, msg: "indices are 1-based".into() });
            }
            if idx <= prev {
                return Err(SigmaError::Index { line: line_no, msg: format!("index {idx} does not follow {prev}") });
            }
            prev = idx;
            entries.push((idx - 1, val));
        }
        max_index = max_index.max(prev);
        labels.push(label);
        rows.push(entries);
    }
    let dim = match features {
        Some(n) if n < max_index => {
            return Err(SigmaError::InvalidDimensions(format!(
                "feature index {max_index} exceeds the requested dimension {n}"
            )))
        }
        Some(n) => n,
        None => max_index,
    };
    if rows.is_empty() || dim == 0 {
        return Err(SigmaError::InvalidDimensions("libsvm input has no rows or no features".into()));
    }
    let mut a = Matrix::zeros(rows.len(), dim);
    for (r, entries) in rows.iter().enumerate() {
        for &(c, v) in entries {
            a[(r, c)] = v;
        }
    }
    Dataset::new(a, Vector::from_vec(labels))
}

/// Writes `ds` in libsvm format, skipping zero entries. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_libsvm(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_libsvm(ds))
        .map_err(|e| SigmaError::Io { path: path.display().to_string(), msg: e.to_string() })
}

pub(crate) fn format_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    let a = ds.a();
    for r in 0..ds.rows() {
        write!(out, "{}", ds.b()[r]).unwrap();
        for c in 0..ds.features() {
            let v = a[(r, c)];
            if v != 0.0 {
                write!(out, " {}:{}", c + 1, v).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let ds = parse_libsvm("1 1:0.5 3:-2\n", Some(3)).unwrap();
        assert_eq!(ds.b().as_slice(), &[1.0]);
        assert_eq!(ds.a().row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.0, -2.0]);
    }

    #[test]
    fn empty_feature_list() {
        let ds = parse_libsvm("0\n1 2:1\n", None).unwrap();
        assert_eq!(ds.features(), 2);
        assert_eq!(ds.a().row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(ds.b()[0], 0.0);
    }

    #[test]
    fn malformed_token() {
        assert_eq!(
            parse_libsvm("1 a:b\n", None).unwrap_err(),
            SigmaError::Parse { line: 1, msg: "bad feature index 'a'".into() }
        );
        assert!(matches!(parse_libsvm("1 1:0.5\nx 1:1\n", None), Err(SigmaError::Parse { line: 2, .. })));
    }

    #[test]
    fn non_ascending_indices() {
        assert!(matches!(parse_libsvm("1 3:1 2:1\n", None), Err(SigmaError::Index { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 0:1\n", None), Err(SigmaError::Index { .. })));
        assert!(matches!(parse_libsvm("1 2:1 2:1\n", None), Err(SigmaError::Index { .. })));
    }

    #[test]
    fn round_trip() {
        let a = Matrix::from_row_slice(2, 3, &[0.1, 0.0, -1.0 / 3.0, 0.0, 0.0, 2e-300]);
        let ds = Dataset::new(a, Vector::from_column_slice(&[1.0, -1.0])).unwrap();
        let back = parse_libsvm(&format_libsvm(&ds), Some(3)).unwrap();
        assert_eq!(back, ds);
    }
}
