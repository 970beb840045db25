use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::distribution::{DistributionKind, Sampler, StepDistribution};
use crate::error::{BalanceError, Result};

/// Number of standard errors required to call a drift estimate negative.
pub const CONFIDENCE_SE: f64 = 3.0;

const BISECTION_STEPS: usize = 60;
const BISECTION_RELATIVE_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub std_err: f64,
}

impl DriftEstimate {
    pub fn confidently_nonpositive(&self) -> bool {
        self.mean <= -CONFIDENCE_SE * self.std_err
    }
}

/// `phi(y) = min(|y|^-alpha, 1)`.
pub fn lyapunov_weight(y: &[f64], alpha: f64) -> f64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    if r2 <= 1.0 {
        1.0
    } else {
        r2.powf(-alpha / 2.0)
    }
}

/// Estimates `E[phi(x + Z) - phi(x)]`. Finite-support laws are summed
/// exactly (zero standard error). Gaussian laws use antithetic pairs
/// `(z, -z)`, which cancels the first-order term; `n_samples` counts draws,
/// so `n_samples / 2` pairs are used.
pub fn lyapunov_drift(
    dist: &StepDistribution,
    alpha: f64,
    x: &DVector<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<DriftEstimate> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(BalanceError::Config(format!("alpha must be positive, got {alpha}")));
    }
    if x.len() != dist.dim() {
        return Err(BalanceError::Config(format!(
            "point has dimension {}, distribution has {}",
            x.len(),
            dist.dim()
        )));
    }
    let base = lyapunov_weight(x.as_slice(), alpha);
    let d = dist.dim();
    let mut y = vec![0.0; d];
    match dist.kind() {
        DistributionKind::FiniteSupport { points, probabilities } => {
            let mean = points
                .iter()
                .zip(probabilities)
                .map(|(p, &w)| {
                    for j in 0..d {
                        y[j] = x[j] + p[j];
                    }
                    w * (lyapunov_weight(&y, alpha) - base)
                })
                .sum();
            Ok(DriftEstimate { mean, std_err: 0.0 })
        }
        DistributionKind::Gaussian { .. } => {
            let pairs = (n_samples / 2).max(2);
            let mut sampler = Sampler::new(dist);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut z = vec![0.0; d];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..pairs {
                sampler.draw(&mut rng, &mut z);
                for j in 0..d {
                    y[j] = x[j] + z[j];
                }
                let plus = lyapunov_weight(&y, alpha);
                for j in 0..d {
                    y[j] = x[j] - z[j];
                }
                let minus = lyapunov_weight(&y, alpha);
                let g = 0.5 * (plus + minus) - base;
                sum += g;
                sum_sq += g * g;
            }
            let n = pairs as f64;
            let mean = sum / n;
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            Ok(DriftEstimate {
                mean,
                std_err: (var / n).sqrt(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R0Search {
    pub r0: f64,
    pub estimate: DriftEstimate,
}

/// Smallest radius along `direction`, within `[r_lo, r_hi]` and up to the
/// bisection resolution, at which the drift is confidently non-positive.
/// Every evaluation reuses `seed`, so neighbouring radii share random
/// numbers. `None` when the drift at `r_hi` is not confidently non-positive.
pub fn locate_r0(
    dist: &StepDistribution,
    alpha: f64,
    direction: &DVector<f64>,
    r_lo: f64,
    r_hi: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Option<R0Search>> {
    if !(0.0 < r_lo && r_lo < r_hi) {
        return Err(BalanceError::Config(format!(
            "need 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]"
        )));
    }
    let norm = direction.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(BalanceError::Config(
            "direction must be a non-zero finite vector".into(),
        ));
    }
    let unit = direction / norm;
    let eval = |r: f64| lyapunov_drift(dist, alpha, &(&unit * r), n_samples, seed);

    let at_hi = eval(r_hi)?;
    if !at_hi.confidently_nonpositive() {
        return Ok(None);
    }
    let at_lo = eval(r_lo)?;
    if at_lo.confidently_nonpositive() {
        return Ok(Some(R0Search {
            r0: r_lo,
            estimate: at_lo,
        }));
    }
    let (mut lo, mut hi, mut best) = (r_lo, r_hi, at_hi);
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= BISECTION_RELATIVE_WIDTH * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let est = eval(mid)?;
        if est.confidently_nonpositive() {
            hi = mid;
            best = est;
        } else {
            lo = mid;
        }
    }
    Ok(Some(R0Search { r0: hi, estimate: best }))
}
