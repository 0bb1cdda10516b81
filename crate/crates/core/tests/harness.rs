use std::fs;
use std::path::Path;
use std::process::Command;

use pushpull::harness::{compare_methods, execute, load_config, run_experiment, AlphaSetting, ExperimentConfig, Method};

const SMALL: &str = r#"
verify = true

[problem]
kind = "sensor_fusion"
n = 5
p = 3
s = 2
lambda = 0.05
seed = 3

[graphs]
kind = "random_strongly_connected"
edge_probability = 0.4
horizon = 20
seed = 4

[algorithm]
alpha = 0.1

[run]
horizon = 300
trace_every = 10
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml(SMALL).unwrap()
}

#[test]
fn config_echo_reloads_to_the_same_config() {
    let cfg = small();
    let result = execute(&cfg, Path::new(".")).unwrap();
    let echo = result.config_echo();
    assert!(echo.contains("[resolved]"));
    assert_eq!(ExperimentConfig::from_toml(&echo).unwrap(), cfg);
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn rejects_unknown_and_invalid_keys() {
    assert!(ExperimentConfig::from_toml(&format!("{SMALL}\nbogus = 1\n")).is_err());
    assert!(ExperimentConfig::from_toml(&SMALL.replace("alpha = 0.1", "alpha = -1.0")).is_err());
    assert!(ExperimentConfig::from_toml(&SMALL.replace("alpha = 0.1", "alpha = \"fast\"")).is_err());
    assert!(ExperimentConfig::from_toml(&SMALL.replace("edge_probability = 0.4", "edge_probability = 1.5")).is_err());
    assert!(ExperimentConfig::from_toml("preset = \"nope\"").is_err());
    let auto = ExperimentConfig::from_toml(&SMALL.replace("alpha = 0.1", "alpha = \"auto\"")).unwrap();
    assert_eq!(auto.algorithm.alpha, AlphaSetting::Auto);
}

#[test]
fn runs_are_deterministic_and_verified() {
    let a = execute(&small(), Path::new(".")).unwrap();
    let b = execute(&small(), Path::new(".")).unwrap();
    assert_eq!(a.trace_csv(), b.trace_csv());
    assert_eq!(a.verification_passed(), Some(true));
    let ks: Vec<usize> = a.records.iter().map(|r| r.k).collect();
    assert_eq!(ks.first(), Some(&0));
    assert_eq!(ks.last(), Some(&300));
    assert!(a.records.last().unwrap().relative_residual < 1e-3);
}

#[test]
fn writes_outputs_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, SMALL.replace("trace_every = 10", "trace_every = 10\noutput = \"out\"")).unwrap();
    let cfg = load_config(&path).unwrap();
    let (_, files) = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(files.trace, dir.path().join("out/trace.csv"));
    let trace = fs::read_to_string(&files.trace).unwrap();
    assert!(trace.starts_with("k,relative_residual,"));
    assert_eq!(trace.lines().count(), 1 + 31);
    assert!(files.report.unwrap().exists());
}

#[test]
fn compare_aligns_methods_and_rejects_mismatched_problems() {
    let ab = small();
    let mut pd = small();
    pd.algorithm.method = Method::PushDiging;
    let combined = compare_methods(&[ab.clone(), pd], Path::new(".")).unwrap();
    assert_eq!(combined.labels.len(), 2);
    assert_eq!(combined.rows.len(), 31);
    let mut other = small();
    other.problem.seed += 1;
    assert!(compare_methods(&[ab, other], Path::new(".")).is_err());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, SMALL).unwrap();
    let bin = env!("CARGO_BIN_EXE_pushpull");
    let run = Command::new(bin).arg("run").arg(&good).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dir.path().join("output/trace.csv").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[problem]\nn = 0\n").unwrap();
    let out = Command::new(bin).arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let wild = dir.path().join("wild.toml");
    fs::write(&wild, SMALL.replace("alpha = 0.1", "alpha = 50.0")).unwrap();
    let out = Command::new(bin).arg("run").arg(&wild).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));

    let bound = Command::new(bin).arg("bound").arg(&good).output().unwrap();
    assert!(bound.status.success());
    assert!(String::from_utf8_lossy(&bound.stdout).contains("eta"));

    let graphs = dir.path().join("g.txt");
    fs::write(&graphs, pushpull::graph::write_rounds(&[pushpull::graph::Digraph::ring(4).unwrap()])).unwrap();
    let m = Command::new(bin).arg("metrics").arg(&graphs).output().unwrap();
    assert!(m.status.success());
    assert_eq!(String::from_utf8_lossy(&m.stdout).lines().nth(1), Some("0,true,3,6"));
}
