//! Dense symmetric linear algebra and the normalized matrix domain the
//! balancer works on.
//!
//! Matrices are small (d up to a few dozen), so everything here is plain
//! cyclic Jacobi: a two-sided sweep for symmetric eigenproblems and the
//! one-sided (Hestenes) variant for singular value decompositions. Both give
//! eigen/singular vectors that are orthonormal to working precision and
//! resolve small singular values to high relative accuracy, which matters
//! because the balancer lets s_d(A) shrink geometrically in d.

use nalgebra::{DMatrix, DVector};
use std::ops::Range;

use crate::error::{BalanceError, Result};

/// A matrix is accepted as positive definite when its smallest eigenvalue
/// exceeds this fraction of its largest.
pub const PD_TOLERANCE: f64 = 1e-10;
/// Relative gap below which two eigen/singular values are one cluster.
pub const MULTIPLICITY_TOLERANCE: f64 = 1e-8;
/// Slack on `s_1 = 1` and on `s_j / s_{j+1} <= R` for domain membership.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;
/// `A` is rank deficient when `s_d(A) <= RANK_TOLERANCE * s_1(A)`.
pub const RANK_TOLERANCE: f64 = 1e-14;

const MAX_SWEEPS: usize = 100;

/// Exactly symmetric real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Accepts a square matrix whose asymmetry is within
    /// `asym_tol * max|m_ij|` and stores its symmetric part.
    pub fn new(m: DMatrix<f64>, asym_tol: f64) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(BalanceError::Input(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(BalanceError::Input("matrix has non-finite entries".into()));
        }
        let scale = m.amax();
        let d = m.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > asym_tol * scale {
                    return Err(BalanceError::Input(format!(
                        "matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {gap:.3e} exceeds {:.3e}",
                        asym_tol * scale
                    )));
                }
            }
        }
        Ok(Self::symmetrize(&m))
    }

    /// Symmetric part `(m + m^T) / 2` of an arbitrary square matrix.
    pub fn symmetrize(m: &DMatrix<f64>) -> Self {
        let d = m.nrows();
        let mut inner = m.clone();
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                inner[(i, j)] = avg;
                inner[(j, i)] = avg;
            }
        }
        SymMatrix { inner }
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix {
            inner: DMatrix::identity(d, d),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix {
            inner: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    /// Row-major construction; symmetrizes.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(BalanceError::Input("rows have inconsistent lengths".into()));
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Self::new(m, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn eig(&self) -> SymEigen {
        sym_eig_unchecked(&self.inner)
    }

    /// `A^T M A`, symmetrized against rounding.
    pub fn congruence(&self, a: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrize(&(a.transpose() * &self.inner * a))
    }

    /// Errors unless the smallest eigenvalue exceeds `PD_TOLERANCE * lambda_1`.
    pub fn check_positive_definite(&self) -> Result<()> {
        let eig = self.eig();
        let top = eig.values[0];
        let bottom = eig.values[self.dim() - 1];
        if top <= 0.0 || bottom <= PD_TOLERANCE * top {
            return Err(BalanceError::Degenerate(format!(
                "matrix is not positive definite: eigenvalue range [{bottom:.3e}, {top:.3e}]"
            )));
        }
        Ok(())
    }

    /// Row-major copy, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// The family `M_1..M_l` of positive-definite matrices sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    dim: usize,
    members: Vec<SymMatrix>,
}

impl MatrixSet {
    pub fn new(members: Vec<SymMatrix>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| BalanceError::Input("matrix set is empty".into()))?;
        let dim = first.dim();
        for (idx, m) in members.iter().enumerate() {
            if m.dim() != dim {
                return Err(BalanceError::Input(format!(
                    "matrix {idx} has dimension {} but matrix 0 has dimension {dim}",
                    m.dim()
                )));
            }
            m.check_positive_definite().map_err(|e| match e {
                BalanceError::Degenerate(msg) => BalanceError::Degenerate(format!("matrix {idx}: {msg}")),
                other => other,
            })?;
        }
        Ok(MatrixSet { dim, members })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SymMatrix] {
        &self.members
    }

    pub fn get(&self, i: usize) -> &SymMatrix {
        &self.members[i]
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full symmetric eigendecomposition, eigenvalues descending.
pub fn sym_eig(m: &SymMatrix) -> Result<SymEigen> {
    if m.matrix().iter().any(|x| !x.is_finite()) {
        return Err(BalanceError::Input("matrix has non-finite entries".into()));
    }
    Ok(m.eig())
}

fn sym_eig_unchecked(m: &DMatrix<f64>) -> SymEigen {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// `A = U diag(s) V^T` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD of an arbitrary `m x n` matrix. `v` is always a full
/// `n x n` orthogonal matrix; the null-space columns of `v` (zero singular
/// values) are orthogonal to every row of `a` to working precision. `u` is
/// `m x n`; its columns for zero singular values are completed to an
/// orthonormal set when `m >= n`.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    w[(k, p)] = c * wp - s * wq;
                    w[(k, q)] = s * wp + c * wq;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = c * vp - s * vq;
                    v[(k, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let singular_values = DVector::from_iterator(n, order.iter().map(|&j| norms[j]));
    let v_sorted = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);

    let top = singular_values.get(0).copied().unwrap_or(0.0);
    let cutoff = (m.max(n) as f64) * f64::EPSILON * top;
    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut missing = Vec::new();
    for (c, &j) in order.iter().enumerate() {
        if norms[j] > cutoff && norms[j] > 0.0 {
            u.set_column(c, &(w.column(j) / norms[j]));
        } else {
            missing.push(c);
        }
    }
    if m >= n {
        complete_orthonormal_columns(&mut u, &missing);
    }
    Svd {
        u,
        singular_values,
        v: v_sorted,
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all other
/// filled columns, drawn from the standard basis by Gram-Schmidt.
fn complete_orthonormal_columns(u: &mut DMatrix<f64>, missing: &[usize]) {
    let m = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|c| !missing.contains(c)).collect();
    let mut basis_idx = 0;
    for &c in missing {
        while basis_idx < m {
            let mut cand = DVector::<f64>::zeros(m);
            cand[basis_idx] = 1.0;
            basis_idx += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let proj = u.column(f).dot(&cand);
                    cand -= u.column(f) * proj;
                }
            }
            let norm = cand.norm();
            if norm > 1e-8 {
                u.set_column(c, &(cand / norm));
                filled.push(c);
                break;
            }
        }
    }
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    svd(a).singular_values
}

/// Polar decomposition `A = B U` with `B` symmetric positive semidefinite
/// and `U` orthogonal.
pub fn polar_decompose(a: &DMatrix<f64>) -> Result<(SymMatrix, DMatrix<f64>)> {
    if !a.is_square() {
        return Err(BalanceError::Input("polar decomposition needs a square matrix".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(BalanceError::Input("matrix has non-finite entries".into()));
    }
    let Svd {
        u: p,
        singular_values: s,
        v: q,
    } = svd(a);
    let b = &p * DMatrix::from_diagonal(&s) * p.transpose();
    let orth = &p * q.transpose();
    Ok((SymMatrix::symmetrize(&b), orth))
}

/// Singular values, singular vectors and their multiplicity clusters for a
/// candidate transformation. Indices are 0-based.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    /// `s_1 >= ... >= s_d`.
    pub singular_values: DVector<f64>,
    /// Column `j` is `w_j`; for symmetric positive-definite `A`,
    /// `A w_j = s_j w_j`.
    pub singular_vectors: DMatrix<f64>,
    /// Maximal index runs of equal singular values.
    pub eigenspace_blocks: Vec<Range<usize>>,
    /// Indices `j` where `s_j / s_{j+1}` sits at the ratio bound.
    pub tight_set: Vec<usize>,
}

impl SpectralProfile {
    /// Profile with an empty tight set.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(BalanceError::Input("profile needs a square matrix".into()));
        }
        let Svd { singular_values, v, .. } = svd(a);
        let d = singular_values.len();
        if singular_values[d - 1] <= RANK_TOLERANCE * singular_values[0] {
            return Err(BalanceError::Degenerate(format!(
                "matrix is rank deficient: s_d = {:.3e}, s_1 = {:.3e}",
                singular_values[d - 1],
                singular_values[0]
            )));
        }
        let eigenspace_blocks = cluster_blocks(singular_values.as_slice());
        Ok(SpectralProfile {
            singular_values,
            singular_vectors: v,
            eigenspace_blocks,
            tight_set: Vec::new(),
        })
    }

    /// Profile with the tight set for ratio bound `r`.
    pub fn with_ratio_bound(a: &DMatrix<f64>, r: f64) -> Result<Self> {
        let mut profile = Self::new(a)?;
        profile.tight_set = crate::perturbation::tight_ratio_set(&profile, r);
        Ok(profile)
    }

    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }

    /// The cluster containing index `j`.
    pub fn block_of(&self, j: usize) -> Range<usize> {
        self.eigenspace_blocks
            .iter()
            .find(|b| b.contains(&j))
            .cloned()
            .expect("blocks partition the index set")
    }
}

/// Partition of a descending sequence into maximal runs whose consecutive
/// relative gaps are below `MULTIPLICITY_TOLERANCE`.
pub fn cluster_blocks(values: &[f64]) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for j in 1..=values.len() {
        let split = j == values.len() || {
            let hi = values[j - 1];
            let lo = values[j];
            (hi - lo).abs() > MULTIPLICITY_TOLERANCE * hi.abs().max(lo.abs())
        };
        if split {
            blocks.push(start..j);
            start = j;
        }
    }
    blocks
}

fn check_full_rank(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    if !a.is_square() {
        return Err(BalanceError::Input(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(BalanceError::Input("matrix has non-finite entries".into()));
    }
    let s = singular_values(a);
    let d = s.len();
    if d == 0 || s[0] == 0.0 || s[d - 1] <= RANK_TOLERANCE * s[0] {
        return Err(BalanceError::Degenerate(format!(
            "transformation is rank deficient: s_d = {:.3e}, s_1 = {:.3e}",
            s.get(d.wrapping_sub(1)).copied().unwrap_or(0.0),
            s.get(0).copied().unwrap_or(0.0)
        )));
    }
    Ok(s)
}

/// `lambda_1 / Tr` of an already formed positive-definite congruence.
pub(crate) fn ratio_of(c: &SymMatrix) -> f64 {
    let top = c.eig().values[0];
    top / c.trace()
}

fn check_dims(a: &DMatrix<f64>, d: usize) -> Result<()> {
    if a.nrows() != d || a.ncols() != d {
        return Err(BalanceError::Input(format!(
            "transformation is {}x{} but matrices are {d}x{d}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `lambda_1(A^T M A) / Tr(A^T M A)`.
pub fn balance_ratio(a: &DMatrix<f64>, m: &SymMatrix) -> Result<f64> {
    check_dims(a, m.dim())?;
    check_full_rank(a)?;
    Ok(ratio_of(&m.congruence(a)))
}

/// Per-matrix balance ratios.
pub fn balance_ratios(a: &DMatrix<f64>, set: &MatrixSet) -> Result<Vec<f64>> {
    check_dims(a, set.dim())?;
    check_full_rank(a)?;
    Ok(ratios_unchecked(a, set))
}

pub(crate) fn ratios_unchecked(a: &DMatrix<f64>, set: &MatrixSet) -> Vec<f64> {
    set.members().iter().map(|m| ratio_of(&m.congruence(a))).collect()
}

/// Worst balance ratio over the family.
pub fn balance_score(a: &DMatrix<f64>, set: &MatrixSet) -> Result<f64> {
    Ok(max_of(&balance_ratios(a, set)?))
}

pub(crate) fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Membership in the domain of matrices with `s_1 = 1` and consecutive
/// singular-value ratios at most `r`.
pub fn in_domain(a: &DMatrix<f64>, r: f64) -> Result<bool> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(BalanceError::Config(format!("ratio bound R must exceed 1, got {r}")));
    }
    if !a.is_square() {
        return Err(BalanceError::Input("domain membership needs a square matrix".into()));
    }
    Ok(singular_values_in_domain(singular_values(a).as_slice(), r))
}

pub(crate) fn singular_values_in_domain(s: &[f64], r: f64) -> bool {
    if (s[0] - 1.0).abs() > DOMAIN_TOLERANCE {
        return false;
    }
    s.windows(2)
        .all(|w| w[1] > 0.0 && w[0] / w[1] <= r * (1.0 + DOMAIN_TOLERANCE))
}

/// `A / s_1(A)`.
pub fn normalize_to_domain(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = check_full_rank(a)?;
    Ok(a / s[0])
}
