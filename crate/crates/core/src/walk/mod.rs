//! Adaptive random walks `X_{t+1} = X_t + xi_{t+1}^{I_t}` where the law index
//! `I_t` is picked by a [`Strategy`] from the observed past.
//!
//! Every walk starts at the origin and owns two ChaCha8 streams derived from
//! `(seed, walk index)`: one for steps and one for the rule. Results therefore
//! do not depend on how walks are scheduled across threads.

mod distribution;
mod drift;
mod experiment;
mod strategy;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BalanceError, Result};

pub use distribution::{DistributionKind, StepDistribution, MEAN_TOLERANCE};
pub use drift::{locate_r0, lyapunov_drift, lyapunov_weight, DriftEstimate, R0Search, CONFIDENCE_SE};
pub use experiment::{
    decay_table, fit_log_log_slope, transience_experiment, write_csv, DecayReport, StrategyDecay, TransienceConfig,
};
pub use strategy::{AdaptiveRule, Observation, Strategy, WalkRule};

use distribution::Sampler;
use strategy::choose;

#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub distributions: Vec<StepDistribution>,
    pub strategy: Strategy,
    /// When set, the walk is observed through `Y_t = P X_t`: the rule sees
    /// `Y_t` and the covariances `P M_i P^T`, and returns are measured on `Y_t`.
    pub preconditioner: Option<DMatrix<f64>>,
    pub horizon: u64,
    pub return_radius: f64,
    pub checkpoints: Vec<u64>,
    pub n_walks: usize,
    pub seed: u64,
}

impl WalkConfig {
    pub fn dim(&self) -> usize {
        self.distributions.first().map_or(0, StepDistribution::dim)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.distributions.is_empty() || d == 0 {
            return Err(BalanceError::Config(
                "at least one step distribution is required".into(),
            ));
        }
        if let Some(i) = self.distributions.iter().position(|m| m.dim() != d) {
            return Err(BalanceError::Config(format!(
                "distribution {i} has dimension {}, expected {d}",
                self.distributions[i].dim()
            )));
        }
        if let Some(p) = &self.preconditioner {
            if p.nrows() != d || p.ncols() != d {
                return Err(BalanceError::Config(format!(
                    "preconditioner is {}x{}, walk dimension is {d}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(BalanceError::Input("preconditioner has a non-finite entry".into()));
            }
        }
        if self.n_walks == 0 {
            return Err(BalanceError::Config("n_walks must be at least 1".into()));
        }
        if !(self.return_radius > 0.0 && self.return_radius.is_finite()) {
            return Err(BalanceError::Config(format!(
                "return radius must be positive, got {}",
                self.return_radius
            )));
        }
        if let Some(&t) = self.checkpoints.iter().max() {
            if t > self.horizon {
                return Err(BalanceError::Config(format!(
                    "checkpoint {t} exceeds horizon {}",
                    self.horizon
                )));
            }
        }
        if let Strategy::Fixed(i) = self.strategy {
            if i >= self.distributions.len() {
                return Err(BalanceError::Config(format!(
                    "fixed({i}) but only {} distributions (indices are 0-based)",
                    self.distributions.len()
                )));
            }
        }
        Ok(())
    }

    /// Step laws as seen by the observer.
    pub fn observed_distributions(&self) -> Result<Vec<StepDistribution>> {
        match &self.preconditioner {
            None => Ok(self.distributions.clone()),
            Some(p) => self.distributions.iter().map(|m| m.push_forward(p)).collect(),
        }
    }
}

/// Return-frequency estimates from one walk population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkStats {
    pub strategy: String,
    pub checkpoints: Vec<u64>,
    /// Fraction of walks visiting the closed ball at some `t` in `(T, horizon]`.
    pub p_hat: Vec<f64>,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub std_err: Vec<f64>,
    pub n_walks: usize,
    pub horizon: u64,
    pub return_radius: f64,
    pub seed: u64,
    /// Last time in `1..=horizon` each walk was inside the ball, 0 if never.
    #[serde(skip)]
    pub last_visits: Vec<u64>,
}

/// Flattened observed laws shared by all walks of a run.
struct Prepared {
    samplers: Vec<Sampler>,
    covariances: Vec<Vec<f64>>,
    d: usize,
}

impl Prepared {
    fn new(config: &WalkConfig) -> Result<Self> {
        config.validate()?;
        let observed = config.observed_distributions()?;
        let d = config.dim();
        let covariances = observed
            .iter()
            .map(|m| {
                let c = m.covariance();
                (0..d * d).map(|n| c.matrix()[(n / d, n % d)]).collect()
            })
            .collect();
        Ok(Self {
            samplers: observed.iter().map(Sampler::new).collect(),
            covariances,
            d,
        })
    }
}

fn walk_rngs(seed: u64, walk: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut steps = ChaCha8Rng::seed_from_u64(seed);
    steps.set_stream(2 * walk as u64);
    let mut rule = ChaCha8Rng::seed_from_u64(seed);
    rule.set_stream(2 * walk as u64 + 1);
    (steps, rule)
}

/// Runs walk number `walk` for up to `steps` steps, calling `visit(t, y)`
/// after step `t` (1-based) until it returns false.
fn run_walk(
    prepared: &Prepared,
    strategy: &Strategy,
    seed: u64,
    walk: usize,
    steps: u64,
    mut visit: impl FnMut(u64, &[f64]) -> bool,
) {
    let (mut step_rng, mut rule_rng) = walk_rngs(seed, walk);
    let mut samplers = prepared.samplers.clone();
    let mut state = strategy.start();
    let mut y = vec![0.0; prepared.d];
    let mut xi = vec![0.0; prepared.d];
    for t in 0..steps {
        let obs = Observation {
            t,
            position: &y,
            covariances: &prepared.covariances,
        };
        let i = choose(strategy, &mut state, &obs, &mut rule_rng);
        samplers[i].draw(&mut step_rng, &mut xi);
        for (a, b) in y.iter_mut().zip(&xi) {
            *a += b;
        }
        if !visit(t + 1, &y) {
            break;
        }
    }
}

fn squared_norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

pub fn simulate_walks(config: &WalkConfig) -> Result<WalkStats> {
    let prepared = Prepared::new(config)?;
    let r2 = config.return_radius * config.return_radius;
    let last_visits: Vec<u64> = (0..config.n_walks)
        .into_par_iter()
        .map(|w| {
            let mut last = 0;
            run_walk(&prepared, &config.strategy, config.seed, w, config.horizon, |t, y| {
                if squared_norm(y) <= r2 {
                    last = t;
                }
                true
            });
            last
        })
        .collect();
    let n = config.n_walks as f64;
    let p_hat: Vec<f64> = config
        .checkpoints
        .iter()
        .map(|&t| last_visits.iter().filter(|&&v| v > t).count() as f64 / n)
        .collect();
    let std_err = p_hat.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    Ok(WalkStats {
        strategy: config.strategy.name(),
        checkpoints: config.checkpoints.clone(),
        p_hat,
        std_err,
        n_walks: config.n_walks,
        horizon: config.horizon,
        return_radius: config.return_radius,
        seed: config.seed,
        last_visits,
    })
}

/// Observed positions `Y_1..Y_steps` of walk number `walk`.
pub fn trajectory(config: &WalkConfig, walk: usize, steps: u64) -> Result<Vec<DVector<f64>>> {
    let prepared = Prepared::new(config)?;
    let mut path = Vec::with_capacity(steps as usize);
    run_walk(&prepared, &config.strategy, config.seed, walk, steps, |_, y| {
        path.push(DVector::from_column_slice(y));
        true
    });
    Ok(path)
}

/// Exit times from a ball, together with the explicit mean bound
/// `E[tau] <= Q' R^2`, `Q = 8K/c`, `Q' = 4 (1 + Q)^2 / c`, where `c` and `K`
/// are the smallest and largest step covariance traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitTimeStats {
    pub radius: f64,
    /// First `t` with `|Y_t| > radius`, capped at the horizon for censored walks.
    pub times: Vec<u64>,
    pub censored: usize,
    pub mean: f64,
    pub q_prime: f64,
    pub mean_bound: f64,
    /// `(delta, t = ceil(R^(2 + delta)), fraction of walks with tau > t)`.
    pub staying: Vec<(f64, u64, f64)>,
}

pub fn exit_time_stats(config: &WalkConfig, radius: f64, deltas: &[f64]) -> Result<ExitTimeStats> {
    let prepared = Prepared::new(config)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(BalanceError::Config(format!("radius must be positive, got {radius}")));
    }
    let traces = config
        .observed_distributions()?
        .iter()
        .map(|m| {
            let c = m.covariance();
            c.check_positive_definite()?;
            Ok(c.trace())
        })
        .collect::<Result<Vec<f64>>>()?;
    let c = traces.iter().copied().fold(f64::INFINITY, f64::min);
    let big_k = traces.iter().copied().fold(0.0, f64::max);
    let q = 8.0 * big_k / c;
    let q_prime = 4.0 * (1.0 + q) * (1.0 + q) / c;

    let r2 = radius * radius;
    let exits: Vec<Option<u64>> = (0..config.n_walks)
        .into_par_iter()
        .map(|w| {
            let mut exit = None;
            run_walk(&prepared, &config.strategy, config.seed, w, config.horizon, |t, y| {
                if squared_norm(y) > r2 {
                    exit = Some(t);
                    false
                } else {
                    true
                }
            });
            exit
        })
        .collect();
    let censored = exits.iter().filter(|e| e.is_none()).count();
    let times: Vec<u64> = exits.iter().map(|e| e.unwrap_or(config.horizon)).collect();
    let n = times.len() as f64;
    let mean = times.iter().map(|&t| t as f64).sum::<f64>() / n;
    let staying = deltas
        .iter()
        .map(|&delta| {
            let t = radius.powf(2.0 + delta).ceil() as u64;
            let inside = exits.iter().filter(|e| e.map_or(true, |tau| tau > t)).count();
            (delta, t, inside as f64 / n)
        })
        .collect();
    Ok(ExitTimeStats {
        radius,
        times,
        censored,
        mean,
        q_prime,
        mean_bound: q_prime * r2,
        staying,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SymMatrix;

    fn gaussian_config(d: usize, n_walks: usize, horizon: u64) -> WalkConfig {
        WalkConfig {
            distributions: vec![StepDistribution::gaussian(SymMatrix::identity(d)).unwrap()],
            strategy: Strategy::Fixed(0),
            preconditioner: None,
            horizon,
            return_radius: 2.0,
            checkpoints: vec![10, 100, 1000],
            n_walks,
            seed: 11,
        }
    }

    #[test]
    fn zero_walks_rejected() {
        let config = gaussian_config(3, 0, 100);
        assert!(matches!(simulate_walks(&config), Err(BalanceError::Config(_))));
    }

    #[test]
    fn checkpoint_beyond_horizon_rejected() {
        let mut config = gaussian_config(3, 10, 100);
        config.checkpoints = vec![200];
        assert!(simulate_walks(&config).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut config = gaussian_config(3, 10, 100);
        config.distributions.push(StepDistribution::simple(2));
        assert!(matches!(simulate_walks(&config), Err(BalanceError::Config(_))));
        let mut config = gaussian_config(3, 10, 100);
        config.preconditioner = Some(DMatrix::identity(2, 2));
        assert!(matches!(simulate_walks(&config), Err(BalanceError::Config(_))));
    }

    #[test]
    fn fixed_index_out_of_range_rejected() {
        let mut config = gaussian_config(3, 10, 100);
        config.strategy = Strategy::Fixed(1);
        assert!(simulate_walks(&config).is_err());
    }

    #[test]
    fn p_hat_is_monotone() {
        let stats = simulate_walks(&gaussian_config(3, 500, 2000)).unwrap();
        assert!(stats.p_hat.windows(2).all(|w| w[1] <= w[0]));
        assert!(stats.p_hat[0] > stats.p_hat[2]);
    }

    #[test]
    fn trajectory_matches_simulation_rng() {
        let config = gaussian_config(2, 3, 1000);
        let a = trajectory(&config, 1, 50).unwrap();
        let b = trajectory(&config, 1, 50).unwrap();
        assert_eq!(a, b);
        let other = trajectory(&config, 2, 50).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn tiny_radius_exits_immediately() {
        let config = gaussian_config(3, 200, 1000);
        let stats = exit_time_stats(&config, 1e-3, &[0.5]).unwrap();
        assert!(stats.times.iter().all(|&t| t == 1));
        assert_eq!(stats.censored, 0);
    }

    #[test]
    fn q_prime_for_identity() {
        let config = gaussian_config(3, 10, 1000);
        let stats = exit_time_stats(&config, 2.0, &[]).unwrap();
        assert!((stats.q_prime - 108.0).abs() < 1e-12);
    }
}
