use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gptemper"));
    c.env_remove("GPTEMPER_WORKERS");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn smooth_data(dir: &Path) {
    smooth_data_n(dir, 12);
}

fn smooth_data_n(dir: &Path, n: usize) {
    let mut text = String::from("a,b,y\n");
    let last = (n - 1) as f64;
    for i in 0..n {
        let a = i as f64 / last;
        let b = ((i * 7) % n) as f64 / last;
        text.push_str(&format!("{a},{b},{}\n", (2.0 * a).sin() + 0.5 * b));
    }
    fs::write(dir.join("d.csv"), text).unwrap();
}

const FAST_ASMC: [&str; 6] = ["--particles", "16", "--grid", "5", "--steps-per-gamma", "2"];

#[test]
fn train_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    smooth_data(dir.path());
    for name in ["m1.json", "m2.json"] {
        let mut args = vec!["train", "--data", "d.csv", "--outputs", "y", "--seed", "7", "--model", name];
        args.extend(FAST_ASMC);
        ok(dir.path(), &args);
    }
    let a = fs::read(dir.path().join("m1.json")).unwrap();
    let b = fs::read(dir.path().join("m2.json")).unwrap();
    assert_eq!(a, b);
    let model: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(model["provenance"]["seed"], 7);
    assert_eq!(model["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(model["parameter_names"].as_array().unwrap().len(), 5);
    assert_eq!(model["samples"].as_array().unwrap().len(), 16);
}

#[test]
fn mcmc_train_writes_trace() {
    let dir = TempDir::new().unwrap();
    smooth_data(dir.path());
    ok(
        dir.path(),
        &[
            "train", "--data", "d.csv", "--outputs", "y", "--engine", "mcmc", "--steps", "300",
            "--init-steps", "100", "--test-fraction", "0.25",
        ],
    );
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "wall_time_s,step_or_gamma,ess,log_target_mean,factorizations,rmse_1"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1], "50");
    assert_eq!(first[2], "");
    let model: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["samples"].as_array().unwrap().len(), 200);
}

#[test]
fn predict_interpolates_training_points() {
    // enough points for the likelihood to overrule the unit-mean noise priors
    let dir = TempDir::new().unwrap();
    smooth_data_n(dir.path(), 40);
    let mut args = vec!["train", "--data", "d.csv", "--outputs", "y", "--seed", "3"];
    args.extend(FAST_ASMC);
    ok(dir.path(), &args);
    ok(dir.path(), &["predict", "--model", "model.json", "--inputs", "d.csv", "--out", "p.csv"]);
    let pred = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let data = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let mut lines = pred.lines();
    assert_eq!(lines.next().unwrap(), "y_mean,y_variance");
    let truth: Vec<f64> = data.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    let n = truth.len() as f64;
    let mean_y = truth.iter().sum::<f64>() / n;
    let sd = (truth.iter().map(|y| (y - mean_y).powi(2)).sum::<f64>() / n).sqrt();
    let mut sq = 0.0;
    for (line, y) in lines.zip(&truth) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        sq += (f[0] - y).powi(2);
        assert!(f[1] > 0.0);
    }
    let rmse = (sq / n).sqrt();
    assert!(rmse < 0.2 * sd, "rmse {rmse} vs output sd {sd}");
}

#[test]
fn predict_empty_and_mismatched_inputs() {
    let dir = TempDir::new().unwrap();
    smooth_data(dir.path());
    let mut args = vec!["train", "--data", "d.csv", "--outputs", "y"];
    args.extend(FAST_ASMC);
    ok(dir.path(), &args);

    fs::write(dir.path().join("empty.csv"), "a,b\n").unwrap();
    ok(dir.path(), &["predict", "--model", "model.json", "--inputs", "empty.csv", "--out", "e.csv"]);
    assert_eq!(fs::read_to_string(dir.path().join("e.csv")).unwrap(), "y_mean,y_variance\n");

    fs::write(dir.path().join("zero.csv"), "").unwrap();
    ok(dir.path(), &["predict", "--model", "model.json", "--inputs", "zero.csv", "--out", "z.csv"]);
    assert_eq!(fs::read_to_string(dir.path().join("z.csv")).unwrap(), "y_mean,y_variance\n");

    fs::write(dir.path().join("wide.csv"), "a,b,c\n0.1,0.2,0.3\n").unwrap();
    let out = run(dir.path(), &["predict", "--model", "model.json", "--inputs", "wide.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema mismatch"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    smooth_data(dir.path());
    assert_eq!(run(dir.path(), &["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["train", "--data", "d.csv", "--outputs", "y", "--engine", "hmc"]).status.code(),
        Some(2)
    );
    let missing = run(dir.path(), &["train", "--data", "d.csv", "--outputs", "nope"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope"));
    let bad_cfg = run(dir.path(), &["train", "--data", "d.csv", "--outputs", "y", "--gamma0", "1.5"]);
    assert_eq!(bad_cfg.status.code(), Some(1));
    assert_eq!(
        run(dir.path(), &["benchmark", "--problem", "branin"]).status.code(),
        Some(1)
    );
}

#[test]
fn workers_env_is_the_default() {
    let dir = TempDir::new().unwrap();
    smooth_data(dir.path());
    let mut args = vec!["train", "--data", "d.csv", "--outputs", "y"];
    args.extend(FAST_ASMC);
    let out = bin().current_dir(dir.path()).env("GPTEMPER_WORKERS", "4").args(&args).output().unwrap();
    assert!(out.status.success());
    let model: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["provenance"]["config"]["workers"], 4);
}

#[test]
fn compare_trace_with_itself() {
    let dir = TempDir::new().unwrap();
    smooth_data(dir.path());
    let mut args = vec!["train", "--data", "d.csv", "--outputs", "y", "--test-fraction", "0.25"];
    args.extend(FAST_ASMC);
    ok(dir.path(), &args);
    ok(dir.path(), &["compare", "trace.csv", "trace.csv"]);
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("verdict.json")).unwrap()).unwrap();
    assert_eq!(v["rmse_ratio"], 1.0);
    assert_eq!(v["factorization_ratio"], 1.0);
    assert!(fs::read_to_string(dir.path().join("compare.csv")).unwrap().starts_with("wall_time_s,a_step_or_gamma"));

    fs::write(dir.path().join("bad.csv"), "time,loss\n1,2\n").unwrap();
    assert_eq!(run(dir.path(), &["compare", "bad.csv", "trace.csv"]).status.code(), Some(1));
}

#[test]
fn benchmark_writes_traces_and_verdict() {
    let dir = TempDir::new().unwrap();
    let common = [
        "benchmark", "--problem", "quadratic4", "--train-n", "15", "--steps", "200", "--init-steps",
        "50", "--particles", "8", "--grid", "4",
    ];
    let mut args = common.to_vec();
    args.extend(["--test-n", "10", "--out-dir", "b1"]);
    ok(dir.path(), &args);
    for f in ["trace_mcmc.csv", "trace_asmc.csv", "summary.json", "verdict.json", "compare.csv"] {
        assert!(dir.path().join("b1").join(f).exists(), "{f}");
    }
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("b1/verdict.json")).unwrap()).unwrap();
    assert!(v["factorization_ratio"].as_f64().unwrap() < 1.0);
    assert!(v["rmse_ratio"].as_f64().is_some());

    let mut args = common.to_vec();
    args.extend(["--test-n", "0", "--out-dir", "b0", "--engines", "asmc"]);
    ok(dir.path(), &args);
    let header = fs::read_to_string(dir.path().join("b0/trace_asmc.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "wall_time_s,step_or_gamma,ess,log_target_mean,factorizations"
    );
    assert!(!dir.path().join("b0/verdict.json").exists());
}
