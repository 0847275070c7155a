//! Command-line interface: run experiments, compute risk bounds, certify
//! externally produced bound files, evaluate policies and export benchmarks.
//!
//! Exit codes: 0 success, 2 validation error, 3 certification infeasible,
//! 4 numeric failure.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use upmdp_core::benchmarks::{build_doc, BenchmarkSpec};
use upmdp_core::harness::{run_experiment, ExperimentConfig};
use upmdp_core::imdp::{exact_policy_value, policy_from_doc, PolicyDoc};
use upmdp_core::model::{instantiate, parse_model, Valuation};
use upmdp_core::rng::SeedStream;
use upmdp_core::scenario::{certify, risk_bound, PerformanceSample, ScenarioError};
use upmdp_core::simulate::{collect_counts_dump, BehaviorPolicy, TrajectoryConfig};

#[derive(Parser)]
#[command(name = "upmdp-cert", about = "Robust policy certification for uncertain parametric MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full train/verify/certify experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute the risk bound for a sample count without sample values.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eta: f64,
        /// Number of discarded worst-case samples.
        #[arg(long, default_value_t = 0)]
        discard: usize,
        /// Force a specific validity count K instead of minimising epsilon.
        #[arg(long)]
        fixed_k: Option<usize>,
    },
    /// Certify a file of per-sample bound values (one float per line).
    Certify {
        #[arg(long)]
        bounds: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        discard: usize,
        /// Direction of the objective the bounds refer to.
        #[arg(long, default_value = "max")]
        direction: String,
        #[arg(long)]
        fixed_k: Option<usize>,
    },
    /// Evaluate a policy file on a model at a given parameter valuation.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// JSON file mapping parameter names to values.
        #[arg(long)]
        theta: PathBuf,
    },
    /// Simulate trajectories through an instantiated model and print counts.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        theta: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trajectories: u64,
        #[arg(long, default_value_t = 200)]
        max_len: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one `s a s'` line per observed triple into this directory.
        #[arg(long)]
        dump_trajectories: Option<PathBuf>,
    },
    /// Export a builtin benchmark as a model document.
    Bench {
        #[command(subcommand)]
        sub: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Print the model document of a builtin benchmark.
    Export {
        name: String,
        /// Override the primary size knob of the generator.
        #[arg(long)]
        size: Option<usize>,
    },
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_VALIDATION, format!("{}: {e}", config.display())),
            };
            let cfg = match ExperimentConfig::from_str_auto(&text) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_VALIDATION, e),
            };
            match run_experiment(&cfg) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).unwrap());
                    ExitCode::SUCCESS
                }
                Err(upmdp_core::harness::HarnessError::Scenario(
                    e @ ScenarioError::Infeasible { .. },
                )) => fail(EXIT_INFEASIBLE, e),
                Err(upmdp_core::harness::HarnessError::Imdp(e)) => fail(EXIT_NUMERIC, e),
                Err(e) => fail(EXIT_VALIDATION, e),
            }
        }
        Command::Bound { n, gamma, eta, discard, fixed_k } => {
            match risk_bound(n, gamma, eta, discard, fixed_k) {
                Ok(b) => {
                    println!(
                        "{}",
                        serde_json::json!({
                            "epsilon": b.epsilon,
                            "K": b.chosen_k_upper,
                            "beta": b.beta,
                        })
                    );
                    ExitCode::SUCCESS
                }
                Err(e @ ScenarioError::Infeasible { .. })
                | Err(e @ ScenarioError::FixedKInfeasible { .. }) => fail(EXIT_INFEASIBLE, e),
                Err(e) => fail(EXIT_VALIDATION, e),
            }
        }
        Command::Certify { bounds, gamma, eta, discard, direction, fixed_k } => {
            let text = match std::fs::read_to_string(&bounds) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_VALIDATION, format!("{}: {e}", bounds.display())),
            };
            let mut samples = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                match line.parse::<f64>() {
                    Ok(value) => samples.push(PerformanceSample { value }),
                    Err(e) => {
                        return fail(EXIT_VALIDATION, format!("line {}: {e}", lineno + 1));
                    }
                }
            }
            let dir = match direction.as_str() {
                "max" => upmdp_core::model::Direction::Max,
                "min" => upmdp_core::model::Direction::Min,
                other => return fail(EXIT_VALIDATION, format!("bad direction {other:?}")),
            };
            match certify(&samples, gamma, eta, discard, dir, fixed_k) {
                Ok(b) => {
                    println!("{}", serde_json::to_string_pretty(&b).unwrap());
                    ExitCode::SUCCESS
                }
                Err(e @ ScenarioError::Infeasible { .. }) => fail(EXIT_INFEASIBLE, e),
                Err(e) => fail(EXIT_VALIDATION, e),
            }
        }
        Command::Evaluate { model, policy, theta } => {
            let run = || -> Result<f64, String> {
                let mtext = std::fs::read_to_string(&model).map_err(|e| e.to_string())?;
                let m = parse_model(&mtext).map_err(|e| e.to_string())?;
                let ptext = std::fs::read_to_string(&policy).map_err(|e| e.to_string())?;
                let pdoc: PolicyDoc = serde_json::from_str(&ptext).map_err(|e| e.to_string())?;
                let pi = policy_from_doc(&pdoc, &m.actions).map_err(|e| e.to_string())?;
                let ttext = std::fs::read_to_string(&theta).map_err(|e| e.to_string())?;
                let val: Valuation = serde_json::from_str(&ttext).map_err(|e| e.to_string())?;
                let inst = instantiate(&m, &val).map_err(|e| e.to_string())?;
                let spec = m.objective.clone();
                let r = exact_policy_value(&inst, &spec, Some(&pi)).map_err(|e| e.to_string())?;
                Ok(r.value)
            };
            match run() {
                Ok(v) => {
                    println!("{}", serde_json::json!({ "value": v }));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_VALIDATION, e),
            }
        }
        Command::Simulate { model, theta, trajectories, max_len, seed, dump_trajectories } => {
            let run = || -> Result<String, String> {
                let mtext = std::fs::read_to_string(&model).map_err(|e| e.to_string())?;
                let m = parse_model(&mtext).map_err(|e| e.to_string())?;
                let ttext = std::fs::read_to_string(&theta).map_err(|e| e.to_string())?;
                let val: Valuation = serde_json::from_str(&ttext).map_err(|e| e.to_string())?;
                let inst = instantiate(&m, &val).map_err(|e| e.to_string())?;
                let cfg = TrajectoryConfig { trajectories, max_len };
                let mut rng = SeedStream::derive(seed, 0, 0);
                let counts = if let Some(dir) = &dump_trajectories {
                    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                    let mut file = std::fs::File::create(dir.join("trajectories.txt"))
                        .map_err(|e| e.to_string())?;
                    collect_counts_dump(
                        &inst,
                        &BehaviorPolicy::UniformRandom,
                        &cfg,
                        &mut rng,
                        &mut file,
                    )
                    .map_err(|e| e.to_string())?
                } else {
                    upmdp_core::simulate::collect_counts(
                        &inst,
                        &BehaviorPolicy::UniformRandom,
                        &cfg,
                        &mut rng,
                    )
                };
                Ok(serde_json::json!({
                    "total_triples": counts.total_triples(),
                    "visits": counts.visits,
                })
                .to_string())
            };
            match run() {
                Ok(out) => {
                    println!("{out}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_VALIDATION, e),
            }
        }
        Command::Bench { sub } => match sub {
            BenchCommand::Export { name, size } => {
                let spec =
                    BenchmarkSpec { name, size, overrides: Default::default() };
                match build_doc(&spec) {
                    Ok(doc) => {
                        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                        ExitCode::SUCCESS
                    }
                    Err(e) => fail(EXIT_VALIDATION, e),
                }
            }
        },
    }
}
