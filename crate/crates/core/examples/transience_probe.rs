//! Balances a random pair in d = 5 for k = 3 and prints return-frequency
//! decay for the observed walk.
//!
//! usage: transience_probe [walks] [horizon] [radius-in-step-units] [strategy]

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_balance::balancer::{BalanceProblem, BalancerConfig};
use spectral_balance::sampling::wishart_set;
use spectral_balance::walk::{transience_experiment, Strategy, TransienceConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let walks: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let horizon: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let radius_units: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let strategy = args
        .get(4)
        .and_then(|s| Strategy::parse(s))
        .unwrap_or(Strategy::MaxRadialVariance);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let set = wishart_set(&mut rng, 5, 2, 1e3);
    let problem = BalanceProblem::new(set, 3).unwrap();

    let probe = transience_experiment(
        &problem,
        &BalancerConfig::default(),
        &TransienceConfig {
            strategies: vec![Strategy::Fixed(0)],
            radius: 1.0,
            checkpoints: vec![],
            horizon: 1,
            n_walks: 1,
            seed: 0,
        },
    )
    .unwrap();
    println!("ratios {:?} status {}", probe.ratios, probe.status);

    let a = nalgebra::DMatrix::from_fn(5, 5, |i, j| probe.a[i][j]);
    let min_trace = problem
        .set
        .members()
        .iter()
        .map(|m| m.congruence(&a).trace())
        .fold(f64::INFINITY, f64::min);
    let radius = radius_units * min_trace.sqrt();
    let checkpoints: Vec<u64> = [2.0, 2.5, 3.0, 3.5, 4.0]
        .iter()
        .map(|e: &f64| 10f64.powf(*e).round() as u64)
        .collect();

    let start = Instant::now();
    let report = transience_experiment(
        &problem,
        &BalancerConfig::default(),
        &TransienceConfig {
            strategies: vec![strategy],
            radius,
            checkpoints,
            horizon,
            n_walks: walks,
            seed: 9,
        },
    )
    .unwrap();
    let row = &report.strategies[0];
    println!(
        "{} radius {radius:.4} time {:.2}s",
        row.strategy,
        start.elapsed().as_secs_f64()
    );
    for ((t, p), se) in row
        .stats
        .checkpoints
        .iter()
        .zip(&row.stats.p_hat)
        .zip(&row.stats.std_err)
    {
        println!("  T = {t:>6}  p = {p:.5} +- {se:.5}");
    }
    println!("  slope {:?}", row.slope);
}
