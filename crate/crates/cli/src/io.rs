use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use spectral_balance::matrix_json::MatrixFile;
use spectral_balance::{BalanceError, MatrixSet, Result};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| BalanceError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_matrix_set(bytes: &[u8]) -> Result<MatrixSet> {
    let text = std::str::from_utf8(bytes).map_err(|_| BalanceError::Input("matrix file is not UTF-8".into()))?;
    MatrixFile::parse(text)?.to_set()
}

/// Reads `A` from a balance result (`{"A": [[...]], ...}`) or a bare array
/// of rows.
pub fn parse_a(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| BalanceError::Input(format!("malformed A JSON: {e}")))?;
    let rows_value = match value.get("A") {
        Some(rows) => rows.clone(),
        None => value,
    };
    let rows: Vec<Vec<f64>> = serde_json::from_value(rows_value)
        .map_err(|e| BalanceError::Input(format!("A must be an array of numeric rows: {e}")))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(BalanceError::Input(format!("A must be square, found {n} rows")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(BalanceError::Input("A has a non-finite entry".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| BalanceError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Writes pretty JSON to `path`, or to stdout when no path is given.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output types serialize");
    match path {
        Some(p) => write_text(p, &(text + "\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_from_result_or_bare_rows() {
        let a = parse_a(br#"{"A": [[1.0, 0.0], [0.0, 2.0]], "k": 2}"#).unwrap();
        assert_eq!(a[(1, 1)], 2.0);
        let b = parse_a(b"[[1.0, 0.0], [0.0, 2.0]]").unwrap();
        assert_eq!(a, b);
        assert!(parse_a(b"[[1.0, 0.0]]").is_err());
        assert!(parse_a(b"{").is_err());
    }
}
