//! Seeded random test instances: Wishart-style positive-definite matrices
//! with bounded condition number, Haar orthogonal matrices, Gaussian
//! matrices.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::spectral::{MatrixSet, SymMatrix};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, d);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of R's diagonal fixed).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, d, d).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `G G^T / n` with `G` a `d x n` Gaussian matrix, `n = d + 2`, resampled
/// until the condition number is at most `max_cond`.
pub fn wishart_pd<R: Rng + ?Sized>(rng: &mut R, d: usize, max_cond: f64) -> SymMatrix {
    let n = d + 2;
    loop {
        let g = gaussian_matrix(rng, d, n);
        let m = SymMatrix::symmetrize(&(&g * g.transpose() / n as f64));
        let eig = m.eig();
        let cond = eig.values[0] / eig.values[d - 1];
        if eig.values[d - 1] > 0.0 && cond <= max_cond {
            return m;
        }
    }
}

pub fn wishart_set<R: Rng + ?Sized>(rng: &mut R, d: usize, count: usize, max_cond: f64) -> MatrixSet {
    let members = (0..count).map(|_| wishart_pd(rng, d, max_cond)).collect();
    MatrixSet::new(members).expect("sampled matrices are positive definite with bounded condition")
}

/// `Q diag(values) Q^T` for a Haar-random `Q`.
pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, values: &[f64]) -> SymMatrix {
    let q = random_orthogonal(rng, values.len());
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
    SymMatrix::symmetrize(&(&q * d * q.transpose()))
}
