use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "specbal",
    version,
    about = "Simultaneous spectral balancing of positive-definite matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find A with lambda_1(A^T M_i A) / Tr(A^T M_i A) < 1/k for every input matrix.
    Balance(BalanceArgs),
    /// Print the balance ratios of a given A; fails if any ratio is >= 1/k.
    Verify(VerifyArgs),
    /// Emit a family that no A balances and check random A against it.
    Sharpness(SharpnessArgs),
    /// Estimate return frequencies of adaptive walks observed through a balancing A.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BalanceArgs {
    /// Matrix JSON file: {"dim": d, "matrices": [[[...]], ...]}.
    #[arg(long)]
    pub input: PathBuf,
    /// Target: every ratio below 1/k. Requires d > k.
    #[arg(long)]
    pub k: usize,
    /// Bound on consecutive singular value ratios: "auto" or a number > 1.
    #[arg(long = "R", default_value = "auto")]
    pub ratio_bound: String,
    /// Required margin below 1/k.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Iteration budget per ratio bound.
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Result JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the accepted steps as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Matrix JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Balance result JSON (key "A") or a bare JSON array of rows.
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SharpnessArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    /// Off-block diagonal value, in (0, 1/d). Defaults to 1/(2d).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of random A to test.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the family as matrix JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Matrix JSON file; the step laws are centered Gaussians with these covariances.
    #[arg(long)]
    pub input: PathBuf,
    /// Balance result JSON, or "auto" to balance first (needs --k).
    #[arg(long, default_value = "auto")]
    pub balancer: String,
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma separated: fixed(i), round_robin, uniform_random,
    /// max_radial_variance, min_radial_variance.
    #[arg(long, default_value = "max_radial_variance")]
    pub strategy: String,
    /// Return radius for the observed walk.
    #[arg(long)]
    pub radius: f64,
    /// Comma separated checkpoint times; scientific notation is accepted.
    #[arg(long, default_value = "1e2,316,1e3,3162,1e4")]
    pub checkpoints: String,
    /// Last simulated step (defaults to ten times the largest checkpoint).
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub walks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-checkpoint estimates as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Summary JSON path (stdout when omitted).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}
