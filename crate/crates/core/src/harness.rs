//! End-to-end experiment orchestration: sample train/verify environments,
//! learn a robust policy on the training side, certify it on the
//! verification side, and estimate empirical risk on fresh samples.

use crate::benchmarks::{build_benchmark, BenchmarkSpec};
use crate::imdp::{
    exact_policy_value, merge_all, policy_to_doc, robust_value_iteration, Policy, PolicyDoc,
};
use crate::learn::{
    learn_lui_imdp, learn_map_imdp, learn_pac_imdp, learn_ucrl2_imdp, IntervalMdp, LearnerKind,
    PacConfig, DEFAULT_MU,
};
use crate::model::{instantiate, sample_valuation, Direction, ParametricMdp, Valuation};
use crate::rng::{Phase, SeedStream};
use crate::scenario::{certify, PerformanceSample, RiskBound};
use crate::simulate::{collect_counts, BehaviorPolicy, PooledCounts, TrajectoryConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Bench(#[from] crate::benchmarks::BenchError),
    #[error(transparent)]
    Learn(#[from] crate::learn::LearnError),
    #[error(transparent)]
    Imdp(#[from] crate::imdp::ImdpError),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error(transparent)]
    Pool(#[from] crate::simulate::PoolError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
}

/// Experiment configuration, loadable from TOML or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Builtin benchmark name, or a path to a model document.
    pub model: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_verify: usize,
    pub n_fresh: usize,
    pub trajectories: u64,
    pub max_len: u32,
    pub gamma: f64,
    pub eta: f64,
    /// Discard counts to certify at.
    pub discards: Vec<usize>,
    /// Learner used on the training set; verification always uses PAC.
    pub train_learner: LearnerKind,
    pub mu: f64,
    /// Pool counts across tied transitions before learning.
    pub pool_counts: bool,
    /// Evaluate ground truth on the hidden instances (the harness owns the
    /// generator, so this is legitimate here and never part of the
    /// certified pipeline).
    pub oracle: bool,
    pub fixed_k: Option<usize>,
    pub output_dir: Option<PathBuf>,
    /// When non-empty, re-learn at these trajectory budgets and emit a
    /// guarantee-versus-trajectories curve.
    pub trajectory_checkpoints: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "chain".to_string(),
            seed: 0,
            n_train: 100,
            n_verify: 100,
            n_fresh: 1000,
            trajectories: 10_000,
            max_len: 200,
            gamma: 1e-4,
            eta: 1e-2,
            discards: vec![0, 5, 10],
            train_learner: LearnerKind::Pac,
            mu: DEFAULT_MU,
            pool_counts: true,
            oracle: true,
            fixed_k: None,
            output_dir: None,
            trajectory_checkpoints: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_str_auto(text: &str) -> Result<ExperimentConfig, HarnessError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
        }
    }
}

/// One certified discard level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub bound: RiskBound,
    /// Fraction of fresh hidden instances performing worse than the
    /// guarantee; None when `n_fresh` is 0.
    pub empirical_risk: Option<f64>,
    /// Set when the minimal-epsilon enumeration deviates from the reference
    /// scale documented for this configuration.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Per-verification-sample robust bounds J(pi, M^gamma[theta_i]).
    pub sample_bounds: Vec<f64>,
    /// Whether the learned PAC IMDP contained its hidden instance (oracle).
    pub included: Option<Vec<bool>>,
    pub certificates: Vec<Certificate>,
    pub policy: PolicyDoc,
    /// Worst-case exact performance of the policy over the hidden
    /// verification instances (oracle).
    pub true_robust_performance: Option<f64>,
    pub timings: Timings,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub train_secs: f64,
    pub verify_secs: f64,
    pub certify_secs: f64,
    pub fresh_secs: f64,
}

fn load_model(source: &str) -> Result<ParametricMdp, HarnessError> {
    match source {
        "chain" | "betting" | "aircraft" | "semiauto" | "uav" => {
            Ok(build_benchmark(&BenchmarkSpec::named(source))?)
        }
        path => {
            let text = std::fs::read_to_string(path)?;
            Ok(crate::model::parse_model(&text)?)
        }
    }
}

fn learn_training_imdp(
    pmdp: &ParametricMdp,
    counts: &PooledCounts,
    cfg: &ExperimentConfig,
) -> Result<IntervalMdp, HarnessError> {
    Ok(match cfg.train_learner {
        LearnerKind::Pac => {
            learn_pac_imdp(pmdp, counts, &PacConfig { gamma: cfg.gamma, mu: cfg.mu })?
        }
        LearnerKind::Lui => learn_lui_imdp(pmdp, counts, cfg.mu)?,
        LearnerKind::Map => learn_map_imdp(pmdp, counts, cfg.mu)?,
        LearnerKind::Ucrl2 => learn_ucrl2_imdp(pmdp, counts, cfg.gamma, cfg.mu)?,
    })
}

struct EnvArtifacts {
    imdp: IntervalMdp,
    instance: crate::model::MdpInstance,
}

fn collect_and_learn(
    pmdp: &ParametricMdp,
    theta: &Valuation,
    cfg: &ExperimentConfig,
    trajectories: u64,
    traj_phase: Phase,
    index: u64,
    pac: bool,
) -> Result<EnvArtifacts, HarnessError> {
    let instance = instantiate(pmdp, theta)?;
    let mut rng = SeedStream::for_phase(cfg.seed, traj_phase, index);
    let counts = collect_counts(
        &instance,
        &BehaviorPolicy::UniformRandom,
        &TrajectoryConfig { trajectories, max_len: cfg.max_len },
        &mut rng,
    );
    let pooled = if cfg.pool_counts {
        crate::simulate::pool_tied_counts(pmdp, &counts)?
    } else {
        PooledCounts::raw(&counts)
    };
    let imdp = if pac {
        learn_pac_imdp(pmdp, &pooled, &PacConfig { gamma: cfg.gamma, mu: cfg.mu })?
    } else {
        learn_training_imdp(pmdp, &pooled, cfg)?
    };
    Ok(EnvArtifacts { imdp, instance })
}

/// Runs the full pipeline. Deterministic in (config, seed): all randomness
/// is derived per (phase, sample index), so parallel scheduling cannot
/// change any result.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    if cfg.n_train == 0 || cfg.n_verify == 0 {
        return Err(HarnessError::Config("n_train and n_verify must be positive".into()));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma < 1.0) || !(cfg.eta > 0.0 && cfg.eta < 1.0) {
        return Err(HarnessError::Config("gamma and eta must lie in (0,1)".into()));
    }
    let pmdp = load_model(&cfg.model)?;
    let direction = pmdp.objective.direction;

    // Disjoint train/verify valuations by construction: distinct phases.
    let train_thetas: Vec<Valuation> = (0..cfg.n_train)
        .map(|i| {
            sample_valuation(
                &pmdp.params,
                &mut SeedStream::for_phase(cfg.seed, Phase::TrainValuation, i as u64),
            )
        })
        .collect();
    let verify_thetas: Vec<Valuation> = (0..cfg.n_verify)
        .map(|i| {
            sample_valuation(
                &pmdp.params,
                &mut SeedStream::for_phase(cfg.seed, Phase::VerifyValuation, i as u64),
            )
        })
        .collect();

    // Training: learn per-environment IMDPs, merge, synthesise the policy.
    let t0 = std::time::Instant::now();
    let train: Result<Vec<EnvArtifacts>, HarnessError> = train_thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            collect_and_learn(
                &pmdp,
                theta,
                cfg,
                cfg.trajectories,
                Phase::TrainTrajectories,
                i as u64,
                false,
            )
        })
        .collect();
    let train = train?;
    let merged = merge_all(&train.iter().map(|e| e.imdp.clone()).collect::<Vec<_>>())?;
    let spec = pmdp.objective.clone();
    let robust = robust_value_iteration(&merged, &spec, true, None)?;
    let policy = robust.policy.expect("optimize returns a policy");
    let train_secs = t0.elapsed().as_secs_f64();

    // Verification: PAC IMDPs, robust evaluation of the fixed policy.
    let t1 = std::time::Instant::now();
    let verify: Result<Vec<(f64, bool)>, HarnessError> = verify_thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let env = collect_and_learn(
                &pmdp,
                theta,
                cfg,
                cfg.trajectories,
                Phase::VerifyTrajectories,
                i as u64,
                true,
            )?;
            let r = robust_value_iteration(&env.imdp, &spec, false, Some(&policy))?;
            Ok((r.value, env.imdp.includes(&env.instance)))
        })
        .collect();
    let verify = verify?;
    let sample_bounds: Vec<f64> = verify.iter().map(|v| v.0).collect();
    let included: Vec<bool> = verify.iter().map(|v| v.1).collect();
    let verify_secs = t1.elapsed().as_secs_f64();

    // Certification per discard level.
    let t2 = std::time::Instant::now();
    let samples: Vec<PerformanceSample> =
        sample_bounds.iter().map(|&value| PerformanceSample { value }).collect();
    let mut certificates = Vec::new();
    for &k in &cfg.discards {
        let bound = certify(&samples, cfg.gamma, cfg.eta, k, direction, cfg.fixed_k)?;
        let note = if bound.fixed_k {
            None
        } else {
            Some(format!(
                "epsilon minimised over validity counts; solved at K = {} of {} usable \
                 samples (set fixed_k to pin a more conservative K)",
                bound.chosen_k_upper,
                samples.len() - k
            ))
        };
        certificates.push(Certificate { bound, empirical_risk: None, note });
    }
    let certify_secs = t2.elapsed().as_secs_f64();

    // Fresh-sample empirical risk (oracle side).
    let t3 = std::time::Instant::now();
    for cert in certificates.iter_mut() {
        if cfg.n_fresh > 0 && cfg.oracle {
            if let Some(guarantee) = cert.bound.guarantee {
                let risk =
                    empirical_risk(&pmdp, &policy, guarantee, cfg.n_fresh, cfg.seed, direction)?;
                cert.empirical_risk = Some(risk);
            }
        }
    }
    let fresh_secs = t3.elapsed().as_secs_f64();

    // Ground-truth robust performance over the hidden verification set.
    let true_robust_performance = if cfg.oracle {
        let values: Result<Vec<f64>, HarnessError> = verify_thetas
            .par_iter()
            .map(|theta| {
                let inst = instantiate(&pmdp, theta)?;
                Ok(exact_policy_value(&inst, &spec, Some(&policy))?.value)
            })
            .collect();
        let values = values?;
        Some(match direction {
            Direction::Max => values.iter().cloned().fold(f64::INFINITY, f64::min),
            Direction::Min => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    } else {
        None
    };

    let report = ExperimentReport {
        config: cfg.clone(),
        sample_bounds,
        included: if cfg.oracle { Some(included) } else { None },
        certificates,
        policy: policy_to_doc(&policy, &pmdp.actions),
        true_robust_performance,
        timings: Timings { train_secs, verify_secs, certify_secs, fresh_secs },
    };

    if let Some(dir) = &cfg.output_dir {
        write_outputs(&report, dir, cfg)?;
        if !cfg.trajectory_checkpoints.is_empty() {
            write_curve(&pmdp, &policy, cfg, dir)?;
        }
    }
    Ok(report)
}

/// Fraction of fresh hidden instances on which the policy performs strictly
/// worse than the guarantee in the risk direction.
pub fn empirical_risk(
    pmdp: &ParametricMdp,
    policy: &Policy,
    guarantee: f64,
    n_fresh: usize,
    seed: u64,
    direction: Direction,
) -> Result<f64, HarnessError> {
    if guarantee == f64::NEG_INFINITY || guarantee == f64::INFINITY {
        return Ok(0.0);
    }
    let spec = pmdp.objective.clone();
    let worse: Result<Vec<bool>, HarnessError> = (0..n_fresh)
        .into_par_iter()
        .map(|i| {
            let theta = sample_valuation(
                &pmdp.params,
                &mut SeedStream::for_phase(seed, Phase::FreshValuation, i as u64),
            );
            let inst = instantiate(pmdp, &theta)?;
            let value = exact_policy_value(&inst, &spec, Some(policy))?.value;
            Ok(direction.worse(value, guarantee))
        })
        .collect();
    let worse = worse?;
    Ok(worse.iter().filter(|&&w| w).count() as f64 / n_fresh as f64)
}

fn write_outputs(
    report: &ExperimentReport,
    dir: &Path,
    cfg: &ExperimentConfig,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("verification.csv"))
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    w.write_record(["sample_id", "J_gamma", "included_check", "seed"])
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    for (i, v) in report.sample_bounds.iter().enumerate() {
        let included = report
            .included
            .as_ref()
            .map(|inc| inc[i].to_string())
            .unwrap_or_default();
        w.write_record([
            i.to_string(),
            format!("{v}"),
            included,
            cfg.seed.to_string(),
        ])
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(dir.join("report.json"), json)?;
    Ok(())
}

/// Re-learns verification IMDPs at increasing trajectory budgets and emits
/// `curve.csv` with one guarantee row per (budget, discard level).
fn write_curve(
    pmdp: &ParametricMdp,
    policy: &Policy,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(), HarnessError> {
    let spec = pmdp.objective.clone();
    let direction = pmdp.objective.direction;
    let mut file = std::fs::File::create(dir.join("curve.csv"))?;
    writeln!(file, "trajectories,discarded,guarantee,epsilon")?;
    for &budget in &cfg.trajectory_checkpoints {
        let bounds: Result<Vec<f64>, HarnessError> = (0..cfg.n_verify)
            .into_par_iter()
            .map(|i| {
                let theta = sample_valuation(
                    &pmdp.params,
                    &mut SeedStream::for_phase(cfg.seed, Phase::VerifyValuation, i as u64),
                );
                let env = collect_and_learn(
                    pmdp,
                    &theta,
                    cfg,
                    budget,
                    Phase::VerifyTrajectories,
                    i as u64,
                    true,
                )?;
                Ok(robust_value_iteration(&env.imdp, &spec, false, Some(policy))?.value)
            })
            .collect();
        let bounds = bounds?;
        let samples: Vec<PerformanceSample> =
            bounds.iter().map(|&value| PerformanceSample { value }).collect();
        for &k in &cfg.discards {
            let c = certify(&samples, cfg.gamma, cfg.eta, k, direction, cfg.fixed_k)?;
            writeln!(
                file,
                "{},{},{},{}",
                budget,
                k,
                c.guarantee.unwrap_or(f64::NAN),
                c.epsilon
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            model: "chain".to_string(),
            seed: 11,
            n_train: 6,
            n_verify: 8,
            n_fresh: 20,
            trajectories: 400,
            max_len: 120,
            discards: vec![0, 2],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = small_cfg();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.sample_bounds, b.sample_bounds);
        assert_eq!(
            a.certificates.iter().map(|c| c.bound.epsilon).collect::<Vec<_>>(),
            b.certificates.iter().map(|c| c.bound.epsilon).collect::<Vec<_>>()
        );
        assert_eq!(a.true_robust_performance, b.true_robust_performance);
        assert_eq!(a.certificates[0].empirical_risk, b.certificates[0].empirical_risk);
    }

    #[test]
    fn guarantee_is_extreme_sample_at_k0() {
        let report = run_experiment(&small_cfg()).unwrap();
        // Chain minimises: the k=0 guarantee is the maximum bound.
        let max = report.sample_bounds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report.certificates[0].bound.guarantee, Some(max));
    }

    #[test]
    fn guarantees_monotone_in_k() {
        let report = run_experiment(&small_cfg()).unwrap();
        let g0 = report.certificates[0].bound.guarantee.unwrap();
        let g2 = report.certificates[1].bound.guarantee.unwrap();
        // Minimise direction: discarding worst-case (largest) samples lowers
        // the guaranteed cost bound.
        assert!(g2 <= g0);
        assert!(report.certificates[1].bound.epsilon > report.certificates[0].bound.epsilon);
    }

    #[test]
    fn epsilon_matches_direct_bound_call() {
        let report = run_experiment(&small_cfg()).unwrap();
        let direct = crate::scenario::risk_bound(8, 1e-4, 1e-2, 0, None).unwrap();
        assert_eq!(report.certificates[0].bound.epsilon, direct.epsilon);
    }

    #[test]
    fn config_parses_from_toml_and_json() {
        let toml_text = "model = \"chain\"\nseed = 3\nn_train = 5\nn_verify = 5\n";
        let c = ExperimentConfig::from_str_auto(toml_text).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.n_train, 5);
        let json_text = "{\"model\": \"chain\", \"seed\": 4}";
        let c = ExperimentConfig::from_str_auto(json_text).unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.n_verify, ExperimentConfig::default().n_verify);
    }
}
