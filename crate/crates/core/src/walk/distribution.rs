use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BalanceError, Result};
use crate::spectral::SymMatrix;

/// Tolerance for `sum_j p_j x_j = 0`, relative to the largest support point.
pub const MEAN_TOLERANCE: f64 = 1e-12;
const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// Centered Gaussian stored through a factor `F` with `F F^T` equal to
    /// the covariance; a draw is `F z` for standard normal `z`.
    Gaussian {
        covariance: SymMatrix,
        factor: DMatrix<f64>,
    },
    FiniteSupport {
        points: Vec<DVector<f64>>,
        probabilities: Vec<f64>,
    },
}

/// Centered step law of an adaptive walk.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    kind: DistributionKind,
    dim: usize,
}

impl StepDistribution {
    pub fn gaussian(covariance: SymMatrix) -> Result<Self> {
        covariance.check_positive_definite()?;
        let factor = covariance
            .matrix()
            .clone()
            .cholesky()
            .ok_or_else(|| BalanceError::Degenerate("Cholesky factorization failed".into()))?
            .l();
        let dim = covariance.dim();
        Ok(Self {
            kind: DistributionKind::Gaussian { covariance, factor },
            dim,
        })
    }

    pub fn finite_support(points: Vec<DVector<f64>>, probabilities: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probabilities.len() {
            return Err(BalanceError::Config(format!(
                "{} support points but {} probabilities",
                points.len(),
                probabilities.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(BalanceError::Config(
                "support points must share a positive dimension".into(),
            ));
        }
        if points.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(BalanceError::Input("support point with a non-finite coordinate".into()));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(BalanceError::Config(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(BalanceError::Config(format!("probabilities sum to {total}, not 1")));
        }
        let mean = points
            .iter()
            .zip(&probabilities)
            .fold(DVector::zeros(dim), |acc, (x, &p)| acc + x * p);
        let scale = points.iter().map(|p| p.amax()).fold(1.0, f64::max);
        if mean.amax() > MEAN_TOLERANCE * scale {
            return Err(BalanceError::Config(format!(
                "step law is not centered: mean = {:?}",
                mean.as_slice()
            )));
        }
        Ok(Self {
            kind: DistributionKind::FiniteSupport { points, probabilities },
            dim,
        })
    }

    /// Uniform law on `+e_j, -e_j`, covariance `Id / d`.
    pub fn simple(d: usize) -> Self {
        let points = (0..2 * d)
            .map(|n| {
                let mut v = DVector::zeros(d);
                v[n / 2] = if n % 2 == 0 { 1.0 } else { -1.0 };
                v
            })
            .collect();
        Self::finite_support(points, vec![1.0 / (2 * d) as f64; 2 * d]).expect("simple walk is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn covariance(&self) -> SymMatrix {
        match &self.kind {
            DistributionKind::Gaussian { covariance, .. } => covariance.clone(),
            DistributionKind::FiniteSupport { points, probabilities } => {
                let m = points
                    .iter()
                    .zip(probabilities)
                    .fold(DMatrix::zeros(self.dim, self.dim), |acc, (x, &p)| {
                        acc + x * x.transpose() * p
                    });
                SymMatrix::symmetrize(&m)
            }
        }
    }

    /// Law of `P Z` for `Z` drawn from `self`. Gaussian factors become `P F`,
    /// so draws from the pushed law equal `P` times draws from `self` under
    /// the same random numbers.
    pub fn push_forward(&self, p: &DMatrix<f64>) -> Result<Self> {
        if p.nrows() != self.dim || p.ncols() != self.dim {
            return Err(BalanceError::Config(format!(
                "preconditioner is {}x{}, distribution has dimension {}",
                p.nrows(),
                p.ncols(),
                self.dim
            )));
        }
        let kind = match &self.kind {
            DistributionKind::Gaussian { covariance, factor } => {
                let covariance = SymMatrix::symmetrize(&(p * covariance.matrix() * p.transpose()));
                DistributionKind::Gaussian {
                    covariance,
                    factor: p * factor,
                }
            }
            DistributionKind::FiniteSupport { points, probabilities } => DistributionKind::FiniteSupport {
                points: points.iter().map(|x| p * x).collect(),
                probabilities: probabilities.clone(),
            },
        };
        Ok(Self { kind, dim: self.dim })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let mut sampler = Sampler::new(self);
        let mut out = vec![0.0; self.dim];
        sampler.draw(rng, &mut out);
        DVector::from_vec(out)
    }
}

/// Flat, allocation-free form of a step law for the simulation loop.
#[derive(Debug, Clone)]
pub(crate) enum Sampler {
    Gaussian {
        factor: Vec<f64>,
        z: Vec<f64>,
        d: usize,
    },
    Finite {
        cumulative: Vec<f64>,
        points: Vec<f64>,
        d: usize,
    },
}

impl Sampler {
    pub(crate) fn new(dist: &StepDistribution) -> Self {
        let d = dist.dim;
        match &dist.kind {
            DistributionKind::Gaussian { factor, .. } => Sampler::Gaussian {
                factor: (0..d * d).map(|n| factor[(n / d, n % d)]).collect(),
                z: vec![0.0; d],
                d,
            },
            DistributionKind::FiniteSupport { points, probabilities } => {
                let mut acc = 0.0;
                let cumulative = probabilities
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                Sampler::Finite {
                    cumulative,
                    points: points.iter().flat_map(|x| x.iter().copied()).collect(),
                    d,
                }
            }
        }
    }

    /// Writes one draw into `out`.
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        match self {
            Sampler::Gaussian { factor, z, d } => {
                for zj in z.iter_mut() {
                    *zj = rng.sample(StandardNormal);
                }
                for (r, o) in out.iter_mut().enumerate() {
                    let row = &factor[r * *d..(r + 1) * *d];
                    *o = row.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                }
            }
            Sampler::Finite { cumulative, points, d } => {
                let u: f64 = rng.random();
                let last = cumulative.len() - 1;
                let idx = cumulative.iter().position(|&c| u < c).unwrap_or(last);
                out.copy_from_slice(&points[idx * *d..(idx + 1) * *d]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simple_walk_covariance() {
        let dist = StepDistribution::simple(3);
        let cov = dist.covariance();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((cov.matrix()[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_uncentered_support() {
        let points = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-0.5])];
        let err = StepDistribution::finite_support(points, vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, BalanceError::Config(_)));
    }

    #[test]
    fn rejects_bad_probabilities() {
        let points = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-1.0])];
        assert!(StepDistribution::finite_support(points.clone(), vec![0.5, 0.6]).is_err());
        assert!(StepDistribution::finite_support(points, vec![0.5]).is_err());
    }

    #[test]
    fn gaussian_rejects_singular() {
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(StepDistribution::gaussian(m).is_err());
    }

    #[test]
    fn push_forward_factor_matches() {
        let m = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let dist = StepDistribution::gaussian(m.clone()).unwrap();
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let pushed = dist.push_forward(&p).unwrap();
        let expected = &p * m.matrix() * p.transpose();
        assert!((pushed.covariance().matrix() - expected).amax() < 1e-12);

        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let a = &p * dist.sample(&mut r1);
        let b = pushed.sample(&mut r2);
        assert!((a - b).amax() < 1e-12);
    }
}
