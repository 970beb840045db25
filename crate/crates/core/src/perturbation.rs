//! Rank-one perturbations `A (Id + eps * eta eta^T)` and the bookkeeping
//! needed to keep them inside the ratio-bounded domain: first-order eigenvalue
//! slopes, the `u`-coordinates `u_j = s_j <eta, w_j>`, the tight set, and the
//! quadratic form whose kernel leaves every active top eigenvalue unchanged to
//! first order.

use nalgebra::{DMatrix, DVector};

use crate::error::{BalanceError, Result};
use crate::spectral::{cluster_blocks, svd, MatrixSet, SpectralProfile, SymMatrix, PD_TOLERANCE};

/// Relative slack for declaring `s_j / s_{j+1}` equal to the ratio bound.
pub const RATIO_TOLERANCE: f64 = 1e-7;

/// `A (Id + eps * eta eta^T)`.
pub fn rank_one_update(a: &DMatrix<f64>, eta: &DVector<f64>, epsilon: f64) -> DMatrix<f64> {
    let d = eta.len();
    let factor = DMatrix::<f64>::identity(d, d) + eta * eta.transpose() * epsilon;
    a * factor
}

/// First-order eigenvalue slopes of `B(eps) = (Id + eps eta eta^T) B (Id + eps eta eta^T)`
/// at `eps = 0`, one entry `(j, slope)` per eigenvalue index (0-based).
///
/// The first index of each eigenvalue cluster moves with slope
/// `2 lambda_j |P_E eta|^2`, `E` the whole cluster eigenspace; the remaining
/// copies inside a cluster do not move.
pub fn first_order_eigen_slopes(b: &SymMatrix, eta: &DVector<f64>) -> Result<Vec<(usize, f64)>> {
    let eig = b.eig();
    let d = b.dim();
    if eta.len() != d {
        return Err(BalanceError::Input(format!(
            "eta has length {} but B is {d}x{d}",
            eta.len()
        )));
    }
    let top = eig.values[0];
    if top <= 0.0 || eig.values[d - 1] <= PD_TOLERANCE * top {
        return Err(BalanceError::Degenerate(
            "eigenvalue slopes need a positive-definite B".into(),
        ));
    }
    let mut slopes = vec![0.0; d];
    for block in cluster_blocks(eig.values.as_slice()) {
        let leader = block.start;
        let proj: f64 = block.clone().map(|c| eig.vectors.column(c).dot(eta).powi(2)).sum();
        slopes[leader] = 2.0 * eig.values[leader] * proj;
    }
    Ok(slopes.into_iter().enumerate().collect())
}

/// `u_j = s_j <eta, w_j>`.
pub fn u_from_eta(profile: &SpectralProfile, eta: &DVector<f64>) -> DVector<f64> {
    let w = &profile.singular_vectors;
    DVector::from_iterator(
        profile.dim(),
        (0..profile.dim()).map(|j| profile.singular_values[j] * w.column(j).dot(eta)),
    )
}

/// Inverse of [`u_from_eta`]: `eta = sum_j (u_j / s_j) w_j`.
pub fn eta_from_u(profile: &SpectralProfile, u: &DVector<f64>) -> DVector<f64> {
    let w = &profile.singular_vectors;
    let mut eta = DVector::zeros(profile.dim());
    for j in 0..profile.dim() {
        eta.axpy(u[j] / profile.singular_values[j], &w.column(j), 1.0);
    }
    eta
}

/// Indices `j` (0-based, pairing `j` with `j + 1`) where
/// `s_j / s_{j+1} >= R (1 - RATIO_TOLERANCE)`.
pub fn tight_ratio_set(profile: &SpectralProfile, r: f64) -> Vec<usize> {
    let s = &profile.singular_values;
    (0..profile.dim().saturating_sub(1))
        .filter(|&j| s[j] / s[j + 1] >= r * (1.0 - RATIO_TOLERANCE))
        .collect()
}

fn block_mass(profile: &SpectralProfile, j: usize, f: impl Fn(usize) -> f64) -> f64 {
    profile.block_of(j).map(f).sum()
}

/// `|P_{E_j} eta|^2 < |P_{E_{j+1}} eta|^2 / 2` for every tight `j`.
pub fn check_eta_condition(profile: &SpectralProfile, eta: &DVector<f64>, r: f64) -> bool {
    let w = &profile.singular_vectors;
    let proj = |k: usize| w.column(k).dot(eta).powi(2);
    tight_ratio_set(profile, r)
        .into_iter()
        .all(|j| block_mass(profile, j, proj) < 0.5 * block_mass(profile, j + 1, proj))
}

/// `sum_{k in block(j)} u_k^2 <= (R^2 / 2) sum_{k in block(j+1)} u_k^2` for
/// every tight `j`. Sufficient for [`check_eta_condition`].
pub fn check_u_condition(profile: &SpectralProfile, u: &DVector<f64>, r: f64) -> bool {
    let sq = |k: usize| u[k] * u[k];
    tight_ratio_set(profile, r)
        .into_iter()
        .all(|j| block_mass(profile, j, sq) <= 0.5 * r * r * block_mass(profile, j + 1, sq))
}

/// One `v_{i,m}` vector of the quadratic form.
#[derive(Debug, Clone)]
pub struct QVector {
    /// Index of the matrix in the family.
    pub matrix: usize,
    /// Unit vector `q_{i,m}` of the top eigenspace of `A M_i A`.
    pub eigenvector: DVector<f64>,
    /// `(<q, w_1>/s_1, ..., <q, w_d>/s_d)`.
    pub v: DVector<f64>,
}

/// `Q(u) = sum <u, v_{i,m}>^2` over the top eigenspaces of the active
/// matrices.
#[derive(Debug, Clone)]
pub struct QForm {
    pub dim: usize,
    pub vectors: Vec<QVector>,
}

impl QForm {
    pub fn value(&self, u: &DVector<f64>) -> f64 {
        self.vectors.iter().map(|q| q.v.dot(u).powi(2)).sum()
    }

    /// Rows are the `v_{i,m}`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.vectors.len(), self.dim);
        for (r, q) in self.vectors.iter().enumerate() {
            s.set_row(r, &q.v.transpose());
        }
        s
    }
}

/// Orthonormal basis of the top eigenspace (cluster of `lambda_1`) of `C`.
pub(crate) fn top_eigenspace(c: &SymMatrix) -> Vec<DVector<f64>> {
    let eig = c.eig();
    let blocks = cluster_blocks(eig.values.as_slice());
    blocks[0].clone().map(|j| eig.vectors.column(j).into_owned()).collect()
}

/// Builds the `v_{i,m}` for the active matrices at a symmetric
/// positive-definite `A`.
pub fn qform_build(a: &DMatrix<f64>, set: &MatrixSet, active: &[usize], k: usize) -> Result<QForm> {
    let profile = SpectralProfile::new(a)?;
    let d = set.dim();
    let mut vectors = Vec::new();
    for &i in active {
        let c = set.get(i).congruence(a);
        let top = top_eigenspace(&c);
        if top.len() >= k {
            return Err(BalanceError::AlreadyBalanced(format!(
                "top eigenspace of A M_{i} A has dimension {} >= k = {k}",
                top.len()
            )));
        }
        for q in top {
            let v = DVector::from_iterator(
                d,
                (0..d).map(|j| profile.singular_vectors.column(j).dot(&q) / profile.singular_values[j]),
            );
            vectors.push(QVector {
                matrix: i,
                eigenvector: q,
                v,
            });
        }
    }
    Ok(QForm { dim: d, vectors })
}

/// Deterministic unit vector in the null space spanned by the columns of
/// `basis`: the normalized projection of the first standard basis vector
/// with a non-negligible projection, sign chosen so that component is
/// positive. This is the null-space vector whose first non-zero component
/// is lexicographically largest in absolute value.
pub(crate) fn canonical_null_vector(basis: &DMatrix<f64>) -> DVector<f64> {
    let d = basis.nrows();
    for e in 0..d {
        let coeffs = basis.row(e).transpose();
        if coeffs.norm() > 1e-8 {
            let mut v = basis * coeffs;
            v /= v.norm();
            if v[e] < 0.0 {
                v = -v;
            }
            return v;
        }
    }
    unreachable!("a non-empty orthonormal basis has a non-zero row")
}

/// Orthonormal basis (columns) of the numerical null space of the rows of
/// `stacked`. Errors when the rows span all of R^d.
pub(crate) fn null_space(stacked: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    if stacked.nrows() == 0 {
        return Ok(DMatrix::identity(d, d));
    }
    let dec = svd(stacked);
    let s = &dec.singular_values;
    let scale = s[0].max(f64::MIN_POSITIVE);
    let cutoff = 1e-10 * scale;
    let null_cols: Vec<usize> = (0..d).filter(|&j| s[j] <= cutoff).collect();
    if null_cols.is_empty() {
        return Err(BalanceError::Infeasible(format!(
            "{} constraint vectors span R^{d}; no common orthogonal direction exists",
            stacked.nrows()
        )));
    }
    Ok(DMatrix::from_fn(d, null_cols.len(), |r, c| dec.v[(r, null_cols[c])]))
}

/// Unit vector with `Q(u) = 0`: the least right singular vector of the
/// stacked `v_{i,m}` matrix.
pub fn qform_kernel(q: &QForm) -> Result<DVector<f64>> {
    let d = q.dim;
    if q.vectors.is_empty() {
        let mut e1 = DVector::zeros(d);
        e1[0] = 1.0;
        return Ok(e1);
    }
    let basis = null_space(&q.stacked(), d)?;
    Ok(canonical_null_vector(&basis))
}

/// Ratio bound paired with a shift radius `c0` by [`lemr_point`].
pub fn lemr_ratio_bound(d: usize, c0: f64) -> f64 {
    (2.0 * d as f64 * (1.0 + c0).powi(2) / (c0 * c0)).sqrt()
}

/// Point within distance `c0` of the unit vector `u_tilde` whose smallest
/// squared coordinate is a fixed fraction of its squared norm:
/// `u = u_tilde + (c0 / sqrt(d)) sign(u_tilde)`. Returns `u` together with
/// the ratio bound `R(c0)` for which `sum u_k^2 <= (R^2/2) min u_k^2`.
pub fn lemr_point(u_tilde: &DVector<f64>, c0: f64) -> Result<(DVector<f64>, f64)> {
    if !(c0 > 0.0 && c0 < 1.0) {
        return Err(BalanceError::Config(format!("c0 must lie in (0, 1), got {c0}")));
    }
    let d = u_tilde.len();
    let shift = c0 / (d as f64).sqrt();
    let u = u_tilde.map(|x| if x < 0.0 { x - shift } else { x + shift });
    Ok((u, lemr_ratio_bound(d, c0)))
}

/// Outcome of [`trace_growth_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceGrowth {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `Tr(A_eta(eps)^T M A_eta(eps)) >= Tr(A^T M A) + 2 lambda_d(M) eps |u|^2`
/// with `|u| = |A eta|`.
pub fn trace_growth_check(a: &DMatrix<f64>, m: &SymMatrix, eta: &DVector<f64>, epsilon: f64) -> TraceGrowth {
    let lambda_min = m.eig().values[m.dim() - 1];
    let perturbed = rank_one_update(a, eta, epsilon);
    let lhs = m.congruence(&perturbed).trace();
    let base = m.congruence(a).trace();
    let u_sq = (a * eta).norm_squared();
    let rhs = base + 2.0 * lambda_min * epsilon * u_sq;
    let pass = lhs >= rhs - 1e-12 * rhs.abs();
    TraceGrowth { lhs, rhs, pass }
}
