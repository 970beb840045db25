use std::fs::File;
use std::io::{BufWriter, Write};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spectral_balance::balancer::{balance as run_balancer, BalanceProblem, BalancerConfig, RatioBound, Status};
use spectral_balance::matrix_json::MatrixFile;
use spectral_balance::sampling::gaussian_matrix;
use spectral_balance::sharpness::{default_epsilon, sharp_family, witness_violation};
use spectral_balance::spectral::balance_ratios;
use spectral_balance::walk::{decay_table, write_csv, Strategy, StrategyDecay, TransienceConfig};
use spectral_balance::{BalanceError, Result};

use crate::args::{BalanceArgs, SharpnessArgs, SimulateArgs, VerifyArgs};
use crate::exit;
use crate::io::{emit_json, parse_a, parse_matrix_set, read_bytes, write_text};
use crate::manifest::{RunManifest, VERSION};

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn fail(err: BalanceError) -> u8 {
    eprintln!("error: {err}");
    match err {
        BalanceError::Infeasible(_) => exit::INFEASIBLE,
        _ => exit::INPUT_ERROR,
    }
}

fn finish(result: Result<u8>) -> u8 {
    result.unwrap_or_else(fail)
}

fn balancer_config(ratio_bound: &str, tol: f64, max_iter: usize, seed: u64) -> Result<BalancerConfig> {
    let ratio_bound = match ratio_bound.trim() {
        "auto" => RatioBound::Auto,
        other => RatioBound::Fixed(
            other
                .parse()
                .map_err(|_| BalanceError::Config(format!("--R must be \"auto\" or a number, got {other:?}")))?,
        ),
    };
    let config = BalancerConfig {
        ratio_bound,
        target_margin: tol,
        max_iterations: max_iter,
        seed,
        ..BalancerConfig::default()
    };
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct BalanceOutput {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    final_score: f64,
    ratios: Vec<f64>,
    k: usize,
    status: &'static str,
    iterations: usize,
    ratio_bound: f64,
    version: &'static str,
    manifest: RunManifest,
}

pub fn balance(args: &BalanceArgs) -> u8 {
    finish(run_balance(args))
}

fn run_balance(args: &BalanceArgs) -> Result<u8> {
    let mut manifest = RunManifest::start("balance", args, Some(args.seed));
    let bytes = read_bytes(&args.input)?;
    manifest.add_input(&bytes);
    let set = parse_matrix_set(&bytes)?;
    let config = balancer_config(&args.ratio_bound, args.tol, args.max_iter, args.seed)?;
    let problem = BalanceProblem::new(set, args.k)?;
    let result = run_balancer(&problem, &config)?;

    if let Some(path) = &args.trace {
        let mut csv = String::from("iteration,kind,epsilon,f_before,f_after\n");
        for s in &result.step_log {
            let kind = serde_json::to_value(s.kind)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            csv.push_str(&format!(
                "{},{kind},{},{},{}\n",
                s.iteration, s.epsilon, s.f_before, s.f_after
            ));
        }
        write_text(path, &csv)?;
    }

    let output = BalanceOutput {
        a: rows(&result.a),
        final_score: result.final_score,
        ratios: result.per_matrix_ratios.clone(),
        k: args.k,
        status: result.status.as_str(),
        iterations: result.iterations,
        ratio_bound: result.ratio_bound,
        version: VERSION,
        manifest: manifest.finish(),
    };
    emit_json(&output, args.out.as_deref())?;
    Ok(match result.status {
        Status::Converged => exit::SUCCESS,
        Status::IterationLimit => {
            eprintln!("iteration limit reached with max ratio {}", result.final_score);
            exit::ITERATION_LIMIT
        }
        Status::Infeasible => {
            eprintln!("no admissible descent direction; ratios {:?}", result.per_matrix_ratios);
            exit::INFEASIBLE
        }
    })
}

#[derive(Serialize)]
struct VerifyOutput {
    ratios: Vec<f64>,
    k: usize,
    threshold: f64,
    balanced: bool,
    /// First matrix index with ratio >= 1/k.
    witness: Option<usize>,
    version: &'static str,
    manifest: RunManifest,
}

pub fn verify(args: &VerifyArgs) -> u8 {
    finish(run_verify(args))
}

fn run_verify(args: &VerifyArgs) -> Result<u8> {
    let mut manifest = RunManifest::start("verify", args, None);
    if args.k == 0 {
        return Err(BalanceError::Config("--k must be positive".into()));
    }
    let bytes = read_bytes(&args.input)?;
    manifest.add_input(&bytes);
    let set = parse_matrix_set(&bytes)?;
    let a_bytes = read_bytes(&args.a)?;
    manifest.add_input(&a_bytes);
    let a = parse_a(&a_bytes)?;
    if a.nrows() != set.dim() {
        return Err(BalanceError::Input(format!(
            "A is {n}x{n} but the matrices are {d}x{d}",
            n = a.nrows(),
            d = set.dim()
        )));
    }
    let ratios = balance_ratios(&a, &set)?;
    let threshold = 1.0 / args.k as f64;
    let witness = ratios.iter().position(|&r| r >= threshold);
    for (i, r) in ratios.iter().enumerate() {
        eprintln!(
            "matrix {i}: ratio {r:.12} {}",
            if *r < threshold { "ok" } else { ">= 1/k" }
        );
    }
    if let Some(i) = witness {
        eprintln!("witness: matrix {i} has ratio {} >= 1/{}", ratios[i], args.k);
    }
    let balanced = witness.is_none();
    emit_json(
        &VerifyOutput {
            ratios,
            k: args.k,
            threshold,
            balanced,
            witness,
            version: VERSION,
            manifest: manifest.finish(),
        },
        None,
    )?;
    Ok(if balanced {
        exit::SUCCESS
    } else {
        exit::VERIFICATION_FAILED
    })
}

#[derive(Serialize)]
struct SharpnessOutput {
    d: usize,
    k: usize,
    ell: usize,
    epsilon: f64,
    trials: usize,
    violations_found: usize,
    failures: Vec<String>,
    family: MatrixFile,
    version: &'static str,
    manifest: RunManifest,
}

pub fn sharpness(args: &SharpnessArgs) -> u8 {
    finish(run_sharpness(args))
}

fn run_sharpness(args: &SharpnessArgs) -> Result<u8> {
    let manifest = RunManifest::start("sharpness", args, Some(args.seed));
    let epsilon = args.epsilon.unwrap_or_else(|| default_epsilon(args.d.max(1)));
    let family = sharp_family(args.d, args.k, epsilon)?;
    let matrix_file = MatrixFile::from_set(&family.set);
    if let Some(path) = &args.out {
        write_text(path, &(matrix_file.to_json() + "\n"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut found = 0;
    let mut failures = Vec::new();
    for trial in 0..args.trials {
        let a = gaussian_matrix(&mut rng, args.d, args.d);
        match witness_violation(&a, &family) {
            Ok(_) => found += 1,
            Err(e) => failures.push(format!("trial {trial}: {e}")),
        }
    }
    let all = found == args.trials;
    emit_json(
        &SharpnessOutput {
            d: family.d,
            k: family.k,
            ell: family.ell,
            epsilon,
            trials: args.trials,
            violations_found: found,
            failures,
            family: matrix_file,
            version: VERSION,
            manifest: manifest.finish(),
        },
        None,
    )?;
    Ok(if all { exit::SUCCESS } else { exit::VERIFICATION_FAILED })
}

#[derive(Serialize)]
struct SimulateOutput {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    ratios: Vec<f64>,
    radius: f64,
    horizon: u64,
    n_walks: usize,
    seed: u64,
    strategies: Vec<StrategyDecay>,
    version: &'static str,
    manifest: RunManifest,
}

fn parse_checkpoints(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(|p| {
            let x: f64 = p
                .trim()
                .parse()
                .map_err(|_| BalanceError::Config(format!("bad checkpoint {p:?}")))?;
            if !(x >= 1.0 && x.is_finite()) {
                return Err(BalanceError::Config(format!("checkpoints must be >= 1, got {p:?}")));
            }
            Ok(x.round() as u64)
        })
        .collect()
}

fn parse_strategies(text: &str) -> Result<Vec<Strategy>> {
    text.split(',')
        .map(|p| Strategy::parse(p).ok_or_else(|| BalanceError::Config(format!("unknown strategy {:?}", p.trim()))))
        .collect()
}

pub fn simulate(args: &SimulateArgs) -> u8 {
    finish(run_simulate(args))
}

fn run_simulate(args: &SimulateArgs) -> Result<u8> {
    let mut manifest = RunManifest::start("simulate", args, Some(args.seed));
    let bytes = read_bytes(&args.input)?;
    manifest.add_input(&bytes);
    let set = parse_matrix_set(&bytes)?;
    let strategies = parse_strategies(&args.strategy)?;
    let checkpoints = parse_checkpoints(&args.checkpoints)?;
    let horizon = args
        .horizon
        .unwrap_or(10 * checkpoints.iter().copied().max().unwrap_or(1));

    let a = if args.balancer.trim() == "auto" {
        let k = args
            .k
            .ok_or_else(|| BalanceError::Config("--balancer auto needs --k".into()))?;
        let problem = BalanceProblem::new(set.clone(), k)?;
        let config = BalancerConfig {
            seed: args.seed,
            ..BalancerConfig::default()
        };
        let result = run_balancer(&problem, &config)?;
        if result.status != Status::Converged {
            eprintln!(
                "warning: balancer stopped with status {} (max ratio {})",
                result.status.as_str(),
                result.final_score
            );
        }
        result.a
    } else {
        let a_bytes = read_bytes(std::path::Path::new(&args.balancer))?;
        manifest.add_input(&a_bytes);
        parse_a(&a_bytes)?
    };

    let config = TransienceConfig {
        strategies,
        radius: args.radius,
        checkpoints,
        horizon,
        n_walks: args.walks,
        seed: args.seed,
    };
    let table = decay_table(&set, &a, &config)?;
    if let Some(path) = &args.csv {
        let file =
            File::create(path).map_err(|e| BalanceError::Input(format!("cannot write {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        write_csv(&table, &mut out)
            .and_then(|_| out.flush())
            .map_err(|e| BalanceError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    for row in &table {
        match row.slope {
            Some(s) => eprintln!("{}: fitted slope {s:.4}", row.strategy),
            None => eprintln!("{}: fewer than two positive estimates, no slope", row.strategy),
        }
    }
    let output = SimulateOutput {
        a: rows(&a),
        ratios: balance_ratios(&a, &set)?,
        radius: args.radius,
        horizon,
        n_walks: args.walks,
        seed: args.seed,
        strategies: table,
        version: VERSION,
        manifest: manifest.finish(),
    };
    emit_json(&output, args.summary.as_deref())?;
    Ok(exit::SUCCESS)
}
