//! Runs `balance` on seeded random Wishart families and prints convergence
//! statistics per shape.
//!
//!     cargo run --release -p spectral-balance --example balance_sweep -- [trials] [R]

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_balance::balancer::{balance, BalanceProblem, BalancerConfig, RatioBound, Status, StepKind};
use spectral_balance::sampling::wishart_set;

fn main() {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let ratio_bound = match std::env::args().nth(2).and_then(|s| s.parse::<f64>().ok()) {
        Some(r) => RatioBound::Fixed(r),
        None => RatioBound::Auto,
    };
    for &(d, k, l) in &[(3, 2, 2), (5, 3, 2), (7, 4, 2), (7, 2, 6), (4, 3, 1)] {
        let mut converged = 0;
        let mut times = Vec::new();
        let mut iters = Vec::new();
        let mut worst: f64 = 0.0;
        let mut boundary_steps = 0;
        let mut total_steps = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((d * 100 + k * 10 + l) as u64);
            let set = wishart_set(&mut rng, d, l, 1e3);
            let problem = BalanceProblem::new(set, k).unwrap();
            let config = BalancerConfig {
                seed,
                ratio_bound,
                ..BalancerConfig::default()
            };
            let start = Instant::now();
            let res = balance(&problem, &config).unwrap();
            times.push(start.elapsed().as_secs_f64());
            iters.push(res.iterations);
            total_steps += res.step_log.len();
            boundary_steps += res.step_log.iter().filter(|s| s.kind == StepKind::Boundary).count();
            if res.status == Status::Converged {
                converged += 1;
            } else {
                worst = worst.max(res.final_score);
                println!(
                    "  miss d={d} k={k} l={l} seed={seed}: status={:?} f={:.6} R={} iters={} stalls={:?}",
                    res.status, res.final_score, res.ratio_bound, res.iterations, res.stalls
                );
            }
        }
        times.sort_by(f64::total_cmp);
        iters.sort();
        println!(
            "(d={d}, k={k}, l={l}): converged {converged}/{trials}, median {:.4}s, max {:.4}s, median iters {}, max iters {}, boundary steps {boundary_steps}/{total_steps}",
            times[times.len() / 2],
            times[times.len() - 1],
            iters[iters.len() / 2],
            iters[iters.len() - 1]
        );
    }
}
