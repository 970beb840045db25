//! Families showing the count bound `l <= floor((d-1)/(k-1))` cannot be
//! relaxed: with `(k - 1) l = d`, member `i` is diagonal with ones on the
//! index block `I(i) = [(k-1) i, (k-1)(i+1))` and `epsilon < 1/d` elsewhere.
//! For any `A`, scale so the largest row of `A` has unit norm; every trace
//! is then at most `k - 1 + d epsilon < k`, while the member whose block holds
//! that row has `lambda_1 >= 1`.

use nalgebra::DMatrix;

use crate::error::{BalanceError, Result};
use crate::spectral::{balance_ratios, MatrixSet, SymMatrix};

#[derive(Debug, Clone)]
pub struct SharpFamily {
    pub d: usize,
    pub k: usize,
    pub ell: usize,
    pub epsilon: f64,
    pub set: MatrixSet,
}

impl SharpFamily {
    /// Index block of member `i` (0-based).
    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        (self.k - 1) * i..(self.k - 1) * (i + 1)
    }
}

/// Midpoint of the admissible range `(0, 1/d)`.
pub fn default_epsilon(d: usize) -> f64 {
    1.0 / (2.0 * d as f64)
}

pub fn sharp_family(d: usize, k: usize, epsilon: f64) -> Result<SharpFamily> {
    if k < 2 || d == 0 {
        return Err(BalanceError::Config(format!(
            "need k >= 2 and d >= 1, got d = {d}, k = {k}"
        )));
    }
    if d % (k - 1) != 0 {
        return Err(BalanceError::Config(format!(
            "k - 1 = {} does not divide d = {d}",
            k - 1
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 / d as f64) {
        return Err(BalanceError::Config(format!(
            "epsilon must lie in (0, 1/d) = (0, {:.6}), got {epsilon}",
            1.0 / d as f64
        )));
    }
    let ell = d / (k - 1);
    let members = (0..ell)
        .map(|i| {
            let diag: Vec<f64> = (0..d)
                .map(|j| {
                    if (k - 1) * i <= j && j < (k - 1) * (i + 1) {
                        1.0
                    } else {
                        epsilon
                    }
                })
                .collect();
            SymMatrix::from_diagonal(&diag)
        })
        .collect();
    let set = MatrixSet::new(members)?;
    Ok(SharpFamily {
        d,
        k,
        ell,
        epsilon,
        set,
    })
}

/// `Tr(A^T M_i A)` for every member after scaling `A` so its largest row
/// has unit norm.
pub fn row_normalized_traces(a: &DMatrix<f64>, family: &SharpFamily) -> Vec<f64> {
    let max_row = (0..a.nrows()).map(|r| a.row(r).norm()).fold(0.0, f64::max);
    let scaled = a / max_row;
    family
        .set
        .members()
        .iter()
        .map(|m| m.congruence(&scaled).trace())
        .collect()
}

/// First member index (0-based) whose balance ratio exceeds `1/k`.
pub fn witness_violation(a: &DMatrix<f64>, family: &SharpFamily) -> Result<(usize, f64)> {
    let ratios = balance_ratios(a, &family.set)?;
    let threshold = 1.0 / family.k as f64;
    ratios
        .iter()
        .position(|&r| r > threshold)
        .map(|i| (i, ratios[i]))
        .ok_or_else(|| {
            BalanceError::Internal(format!(
                "no member exceeds 1/k = {threshold} (d = {}, k = {}, epsilon = {}); ratios = {ratios:?}; \
                 row-normalized traces = {:?}; A = {a:?}",
                family.d,
                family.k,
                family.epsilon,
                row_normalized_traces(a, family)
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn family_d4_k3() {
        let fam = sharp_family(4, 3, 0.1).unwrap();
        assert_eq!(fam.ell, 2);
        assert_eq!(fam.set.get(0), &SymMatrix::from_diagonal(&[1.0, 1.0, 0.1, 0.1]));
        assert_eq!(fam.set.get(1), &SymMatrix::from_diagonal(&[0.1, 0.1, 1.0, 1.0]));
    }

    #[test]
    fn family_d2_k2() {
        let fam = sharp_family(2, 2, 0.25).unwrap();
        assert_eq!(fam.set.get(0), &SymMatrix::from_diagonal(&[1.0, 0.25]));
        assert_eq!(fam.set.get(1), &SymMatrix::from_diagonal(&[0.25, 1.0]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(sharp_family(4, 3, 0.25), Err(BalanceError::Config(_))));
        assert!(matches!(sharp_family(5, 3, 0.1), Err(BalanceError::Config(_))));
        assert!(matches!(sharp_family(4, 3, 0.0), Err(BalanceError::Config(_))));
    }

    #[test]
    fn identity_is_defeated() {
        let fam = sharp_family(4, 3, 0.1).unwrap();
        let (i0, ratio) = witness_violation(&DMatrix::identity(4, 4), &fam).unwrap();
        assert_eq!(i0, 0);
        assert_relative_eq!(ratio, 1.0 / 2.2, epsilon = 1e-15);

        let fam = sharp_family(2, 2, 0.25).unwrap();
        let (i0, ratio) = witness_violation(&DMatrix::identity(2, 2), &fam).unwrap();
        assert_eq!(i0, 0);
        assert_relative_eq!(ratio, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn witness_is_scale_invariant() {
        let fam = sharp_family(6, 4, default_epsilon(6)).unwrap();
        let a = DMatrix::from_fn(6, 6, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 - 1.7 + if i == j { 3.0 } else { 0.0 }
        });
        let (i0, r0) = witness_violation(&a, &fam).unwrap();
        let (i1, r1) = witness_violation(&(&a * -3.5), &fam).unwrap();
        assert_eq!(i0, i1);
        assert_relative_eq!(r0, r1, max_relative = 1e-12);
    }
}
