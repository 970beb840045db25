//! `{"dim": d, "matrices": [[[row-major d x d]], ...]}`

use serde::{Deserialize, Serialize};

use crate::error::{BalanceError, Result};
use crate::spectral::{MatrixSet, SymMatrix};

/// Asymmetry up to this fraction of the largest entry is symmetrized away.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_set(set: &MatrixSet) -> Self {
        MatrixFile {
            dim: set.dim(),
            matrices: set.members().iter().map(SymMatrix::to_rows).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BalanceError::Input(format!("malformed matrix JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric data serializes")
    }

    /// Validates shapes, symmetry and positive definiteness; errors name the
    /// offending matrix index.
    pub fn to_set(&self) -> Result<MatrixSet> {
        if self.matrices.is_empty() {
            return Err(BalanceError::Input("matrix file contains no matrices".into()));
        }
        let mut members = Vec::with_capacity(self.matrices.len());
        for (idx, rows) in self.matrices.iter().enumerate() {
            let shape_ok = rows.len() == self.dim && rows.iter().all(|r| r.len() == self.dim);
            if !shape_ok || self.dim == 0 {
                return Err(BalanceError::Input(format!(
                    "matrix {idx}: expected {d}x{d} rows, found {} rows",
                    rows.len(),
                    d = self.dim
                )));
            }
            if rows.iter().flatten().any(|x| !x.is_finite()) {
                return Err(BalanceError::Input(format!("matrix {idx}: non-finite entry")));
            }
            let m = nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| rows[i][j]);
            let sym = SymMatrix::new(m, ASYMMETRY_TOLERANCE).map_err(|e| match e {
                BalanceError::Input(msg) => BalanceError::Input(format!("matrix {idx}: {msg}")),
                other => other,
            })?;
            members.push(sym);
        }
        MatrixSet::new(members)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let set = MatrixSet::new(vec![SymMatrix::identity(2), SymMatrix::from_diagonal(&[3.0, 0.5])]).unwrap();
        let file = MatrixFile::from_set(&set);
        let back = MatrixFile::parse(&file.to_json()).unwrap().to_set().unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized_large_is_rejected() {
        let ok = r#"{"dim": 2, "matrices": [[[2.0, 0.5], [0.5000000000001, 1.0]]]}"#;
        let set = MatrixFile::parse(ok).unwrap().to_set().unwrap();
        let m = set.get(0).matrix();
        assert_eq!(m[(0, 1)], m[(1, 0)]);

        let bad = r#"{"dim": 2, "matrices": [[[1.0, 0.0], [0.0, 1.0]], [[2.0, 0.5], [0.6, 1.0]]]}"#;
        let err = MatrixFile::parse(bad).unwrap().to_set().unwrap_err();
        assert!(err.to_string().contains("matrix 1"), "{err}");
        assert!(err.to_string().contains("symmetric"), "{err}");
    }

    #[test]
    fn non_pd_and_bad_shapes_are_reported() {
        let npd = r#"{"dim": 2, "matrices": [[[1.0, 2.0], [2.0, 1.0]]]}"#;
        let err = MatrixFile::parse(npd).unwrap().to_set().unwrap_err();
        assert!(matches!(err, BalanceError::Degenerate(_)));
        assert!(err.to_string().contains("matrix 0"));

        let shape = r#"{"dim": 3, "matrices": [[[1.0, 0.0], [0.0, 1.0]]]}"#;
        assert!(MatrixFile::parse(shape).unwrap().to_set().is_err());
        assert!(MatrixFile::parse("{not json").is_err());
    }
}
