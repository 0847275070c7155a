//! End-to-end CLI tests over the external interfaces: the bound/certify
//! commands, model/policy/valuation files, benchmark export and exit codes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_upmdp-cert"))
}

#[test]
fn bound_prints_epsilon_json() {
    let out = bin()
        .args(["bound", "--n", "300", "--gamma", "1e-4", "--eta", "1e-2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eps = v["epsilon"].as_f64().unwrap();
    assert!(eps > 0.0 && eps <= 0.032, "epsilon {eps}");
    assert!(v["K"].as_u64().is_some());
    assert!(v["beta"].as_f64().unwrap() > 0.0);
}

#[test]
fn bound_discard_increases_epsilon() {
    let run = |k: &str| -> f64 {
        let out = bin()
            .args(["bound", "--n", "300", "--gamma", "1e-4", "--eta", "1e-2", "--discard", k])
            .output()
            .unwrap();
        serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap()["epsilon"]
            .as_f64()
            .unwrap()
    };
    assert!(run("5") > run("0"));
}

#[test]
fn bound_infeasible_exits_3() {
    let out = bin()
        .args(["bound", "--n", "50", "--gamma", "0.95", "--eta", "0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_arguments_exit_2() {
    let out = bin()
        .args(["bound", "--n", "0", "--gamma", "1e-4", "--eta", "1e-2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_reads_bounds_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bounds.txt");
    std::fs::write(&path, "0.51\n0.62\n# a comment\n0.70\n0.55\n").unwrap();
    let out = bin()
        .args([
            "certify",
            "--bounds",
            path.to_str().unwrap(),
            "--gamma",
            "1e-4",
            "--eta",
            "0.05",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["guarantee"].as_f64().unwrap(), 0.51);
    assert_eq!(v["n_samples"].as_u64().unwrap(), 4);
}

#[test]
fn certify_min_direction_uses_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bounds.txt");
    std::fs::write(&path, "3.0\n1.0\n2.0\n").unwrap();
    let out = bin()
        .args([
            "certify",
            "--bounds",
            path.to_str().unwrap(),
            "--gamma",
            "1e-4",
            "--eta",
            "0.05",
            "--direction",
            "min",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["guarantee"].as_f64().unwrap(), 3.0);
}

#[test]
fn bench_export_round_trips_and_counts() {
    let out = bin().args(["bench", "export", "chain"]).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["states"].as_u64().unwrap(), 7);
    assert_eq!(doc["transitions"].as_array().unwrap().len(), 42);
}

#[test]
fn bench_export_unknown_exits_2() {
    let out = bin().args(["bench", "export", "mystery"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

/// Full external-interface loop: export a model, write an external policy
/// file and a valuation file, evaluate, simulate with a trajectory dump.
#[test]
fn evaluate_and_simulate_on_exported_model() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("chain.json");
    let out = bin().args(["bench", "export", "chain"]).output().unwrap();
    std::fs::write(&model_path, &out.stdout).unwrap();

    // External policy: always push forward.
    let policy: serde_json::Value = serde_json::json!({
        "0": "fwd", "1": "fwd", "2": "fwd", "3": "fwd", "4": "fwd", "5": "fwd", "6": "fwd"
    });
    let policy_path = dir.path().join("policy.json");
    std::fs::write(&policy_path, serde_json::to_string(&policy).unwrap()).unwrap();

    let theta_path = dir.path().join("theta.json");
    std::fs::write(&theta_path, "{\"p\": 0.5}").unwrap();

    let out = bin()
        .args([
            "evaluate",
            "--model",
            model_path.to_str().unwrap(),
            "--policy",
            policy_path.to_str().unwrap(),
            "--theta",
            theta_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // Expected steps for always-forward at p = 0.5 on a 6-cell chain:
    // E = 2(2^6 - 1) = 126.
    let value = v["value"].as_f64().unwrap();
    assert!((value - 126.0).abs() < 1e-5, "value {value}");

    let dump_dir = dir.path().join("dump");
    let out = bin()
        .args([
            "simulate",
            "--model",
            model_path.to_str().unwrap(),
            "--theta",
            theta_path.to_str().unwrap(),
            "--trajectories",
            "50",
            "--max-len",
            "30",
            "--seed",
            "7",
            "--dump-trajectories",
            dump_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let total = v["total_triples"].as_u64().unwrap();
    assert!(total > 0 && total <= 50 * 30);
    // Dump format: one `s a s'` triple of integers per line.
    let text = std::fs::read_to_string(dump_dir.join("trajectories.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() as u64, total);
    for line in lines.iter().take(20) {
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(parts.len(), 3, "bad dump line {line:?}");
        for p in parts {
            p.parse::<usize>().unwrap();
        }
    }
}

#[test]
fn evaluate_rejects_bad_policy_action() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("chain.json");
    let out = bin().args(["bench", "export", "chain"]).output().unwrap();
    std::fs::write(&model_path, &out.stdout).unwrap();
    let policy_path = dir.path().join("policy.json");
    std::fs::write(&policy_path, "{\"0\": \"warp\"}").unwrap();
    let theta_path = dir.path().join("theta.json");
    std::fs::write(&theta_path, "{\"p\": 0.5}").unwrap();
    let out = bin()
        .args([
            "evaluate",
            "--model",
            model_path.to_str().unwrap(),
            "--policy",
            policy_path.to_str().unwrap(),
            "--theta",
            theta_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_emits_report_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = format!(
        "model = \"chain\"\nseed = 5\nn_train = 4\nn_verify = 6\nn_fresh = 0\n\
         trajectories = 300\nmax_len = 60\ndiscards = [0]\noutput_dir = \"{}\"\n",
        out_dir.display()
    );
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = bin()
        .args(["run", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["sample_bounds"].as_array().unwrap().len(), 6);
    // CSV schema: sample_id, J_gamma, included_check, seed.
    let csv = std::fs::read_to_string(out_dir.join("verification.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "sample_id,J_gamma,included_check,seed");
    assert_eq!(lines.count(), 6);
    assert!(out_dir.join("report.json").exists());
}
