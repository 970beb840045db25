use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{simulate_walks, StepDistribution, Strategy, WalkConfig, WalkStats};
use crate::balancer::{balance, BalanceProblem, BalancerConfig, Status};
use crate::error::{BalanceError, Result};
use crate::spectral::{balance_ratios, matrix_rows, MatrixSet};

#[derive(Debug, Clone)]
pub struct TransienceConfig {
    pub strategies: Vec<Strategy>,
    /// Return radius for the observed walk.
    pub radius: f64,
    pub checkpoints: Vec<u64>,
    pub horizon: u64,
    pub n_walks: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategyDecay {
    pub strategy: String,
    /// Least-squares slope of `ln p_hat` against `ln T` over checkpoints with
    /// `p_hat > 0`; absent when fewer than two such checkpoints exist.
    pub slope: Option<f64>,
    pub stats: WalkStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub k: usize,
    pub ratios: Vec<f64>,
    pub status: String,
    pub strategies: Vec<StrategyDecay>,
}

pub fn fit_log_log_slope(checkpoints: &[u64], p_hat: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = checkpoints
        .iter()
        .zip(p_hat)
        .filter(|(&t, &p)| t > 0 && p > 0.0)
        .map(|(&t, &p)| ((t as f64).ln(), p.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Walks with Gaussian steps of covariance `M_i`, observed through `A^T`.
/// The observed step covariances are then `A^T M_i A`, the matrices whose
/// balance ratios `A` controls.
pub fn decay_table(set: &MatrixSet, a: &DMatrix<f64>, config: &TransienceConfig) -> Result<Vec<StrategyDecay>> {
    if a.nrows() != set.dim() || a.ncols() != set.dim() {
        return Err(BalanceError::Config(format!(
            "A is {}x{}, matrices are {}x{}",
            a.nrows(),
            a.ncols(),
            set.dim(),
            set.dim()
        )));
    }
    if config.strategies.is_empty() {
        return Err(BalanceError::Config("no strategies given".into()));
    }
    let distributions = set
        .members()
        .iter()
        .map(|m| StepDistribution::gaussian(m.clone()))
        .collect::<Result<Vec<_>>>()?;
    config
        .strategies
        .iter()
        .map(|strategy| {
            let walk = WalkConfig {
                distributions: distributions.clone(),
                strategy: strategy.clone(),
                preconditioner: Some(a.transpose()),
                horizon: config.horizon,
                return_radius: config.radius,
                checkpoints: config.checkpoints.clone(),
                n_walks: config.n_walks,
                seed: config.seed,
            };
            let stats = simulate_walks(&walk)?;
            Ok(StrategyDecay {
                strategy: stats.strategy.clone(),
                slope: fit_log_log_slope(&stats.checkpoints, &stats.p_hat),
                stats,
            })
        })
        .collect()
}

/// Balances the problem, then measures how fast return frequencies decay
/// for each strategy.
pub fn transience_experiment(
    problem: &BalanceProblem,
    balancer: &BalancerConfig,
    config: &TransienceConfig,
) -> Result<DecayReport> {
    let result = balance(problem, balancer)?;
    if result.status == Status::Infeasible {
        return Err(BalanceError::Infeasible(
            "balancer could not find a descent direction".into(),
        ));
    }
    let strategies = decay_table(&problem.set, &result.a, config)?;
    Ok(DecayReport {
        a: matrix_rows(&result.a),
        k: problem.k,
        ratios: balance_ratios(&result.a, &problem.set)?,
        status: result.status.as_str().to_string(),
        strategies,
    })
}

pub fn write_csv<W: Write>(rows: &[StrategyDecay], mut out: W) -> std::io::Result<()> {
    writeln!(out, "strategy,T,p_hat,std_err,n_walks,T_max,seed")?;
    for row in rows {
        let s = &row.stats;
        for ((t, p), se) in s.checkpoints.iter().zip(&s.p_hat).zip(&s.std_err) {
            writeln!(
                out,
                "{},{t},{p},{se},{},{},{}",
                row.strategy, s.n_walks, s.horizon, s.seed
            )?;
        }
    }
    Ok(())
}
