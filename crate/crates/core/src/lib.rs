//! Simultaneous spectral balancing of positive-definite matrices.
//!
//! Given positive-definite `M_1..M_l` of size `d` and an integer `k` with
//! `d > k` and `l <= floor((d - 1) / (k - 1))`, [`balancer::balance`] finds a
//! transformation `A` with `lambda_1(A^T M_i A) / Tr(A^T M_i A) < 1/k` for
//! every `i`. [`sharpness`] builds families where no such `A` exists once the
//! count bound is exceeded, and [`walk`] simulates adaptive random walks whose
//! step covariances are balanced this way.

pub mod balancer;
pub mod error;
pub mod matrix_json;
pub mod perturbation;
pub mod sampling;
pub mod sharpness;
pub mod spectral;
pub mod walk;

pub use error::{BalanceError, Result};
pub use spectral::{MatrixSet, SymMatrix};
