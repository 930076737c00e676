use std::path::Path;

use crate::error::{Result, SigmaError};
use crate::linalg::{Matrix, Vector};
use crate::objective::Dataset;

/// Reads a comma-separated numeric file. `label_column` defaults to the
/// last column. A first row that does not parse as numbers is treated as a
/// header and skipped.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<Dataset> {
    let text = super::read_text(path.as_ref())?;
    parse_csv(&text, label_column)
}

pub fn parse_csv(text: &str, label_column: Option<usize>) -> Result<Dataset> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| SigmaError::Parse { line: i + 1, msg: e.to_string() })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if rows.is_empty() && width.is_none() => {
                width = Some(record.len());
                continue;
            }
            Err(e) => return Err(SigmaError::Parse { line, msg: e.to_string() }),
        };
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected {
            return Err(SigmaError::RaggedRows { line, expected, found: values.len() });
        }
        rows.push(values);
    }
    let cols = width.unwrap_or(0);
    if rows.is_empty() || cols < 2 {
        return Err(SigmaError::InvalidDimensions("CSV input needs at least one data row and two columns".into()));
    }
    let label = label_column.unwrap_or(cols - 1);
    if label >= cols {
        return Err(SigmaError::InvalidDimensions(format!("label column {label} out of range for {cols} columns")));
    }
    let mut a = Matrix::zeros(rows.len(), cols - 1);
    let mut b = Vector::zeros(rows.len());
    for (r, values) in rows.iter().enumerate() {
        let mut c = 0;
        for (j, &v) in values.iter().enumerate() {
            if j == label {
                b[r] = v;
            } else {
                a[(r, c)] = v;
                c += 1;
            }
        }
    }
    Dataset::new(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_column_label() {
        let ds = parse_csv("0.5,-2,1\n", None).unwrap();
        assert_eq!(ds.a().as_slice(), &[0.5, -2.0]);
        assert_eq!(ds.b().as_slice(), &[1.0]);
    }

    #[test]
    fn explicit_label_column() {
        let ds = parse_csv("1,0.5,-2\n0,1,1\n", Some(0)).unwrap();
        assert_eq!(ds.b().as_slice(), &[1.0, 0.0]);
        assert_eq!(ds.a()[(0, 1)], -2.0);
    }

    #[test]
    fn header_skipped() {
        let ds = parse_csv("x1,x2,y\n0.5,-2,1\n", None).unwrap();
        assert_eq!(ds.rows(), 1);
        assert_eq!(ds.features(), 2);
    }

    #[test]
    fn ragged() {
        assert_eq!(
            parse_csv("1,2,3\n4,5\n", None).unwrap_err(),
            SigmaError::RaggedRows { line: 2, expected: 3, found: 2 }
        );
        assert!(matches!(parse_csv("x,y,z\n1,2\n", None), Err(SigmaError::RaggedRows { .. })));
    }

    #[test]
    fn bad_number_after_data() {
        assert!(matches!(parse_csv("1,2\nfoo,3\n", None), Err(SigmaError::Parse { line: 2, .. })));
    }
}
