use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn rdcbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdcbf")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_summary_and_log() {
    let out = tempfile::tempdir().unwrap();
    let scenario = data("scenario_a.json");
    let o = rdcbf(&["run", "--scenario", scenario.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = read_json(out.path().join("run.json"));
    assert_eq!(summary["success"], true);
    assert_eq!(summary["mode"], "rdcbf");
    assert!(summary["config"]["params"]["gamma"].is_number());
    let csv = std::fs::read_to_string(out.path().join("run.csv")).unwrap();
    assert!(csv.lines().count() > 100);
}

#[test]
fn small_beta_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let scenario = data("scenario_b.json");
    let o = rdcbf(&["run", "--scenario", scenario.to_str().unwrap(), "--beta", "1e-6", "--out", out.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("beta > e0^2/(2*h0)"), "{}", stderr(&o));
}

#[test]
fn known_failing_dcbf_seed_is_a_violation() {
    let out = tempfile::tempdir().unwrap();
    let scenario = data("scenario_b.json");
    let o = rdcbf(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--mode",
        "dcbf",
        "--seed",
        "0",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(read_json(out.path().join("run.json"))["min_h"].as_f64().unwrap() < 0.0);
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = read_json(data("scenario_a.json"));
    sc["planner"]["gamma"] = Value::String("fast".into());
    let path = dir.path().join("bad.json");
    std::fs::write(&path, serde_json::to_string_pretty(&sc).unwrap()).unwrap();
    let o = rdcbf(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.contains("bad.json") && err.contains("line"), "{err}");

    let o = rdcbf(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bench_with_a_single_run() {
    let out = tempfile::tempdir().unwrap();
    let scenario = data("scenario_a.json");
    let o = rdcbf(&[
        "bench",
        "--scenario",
        scenario.to_str().unwrap(),
        "--runs",
        "1",
        "--jobs",
        "1",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    for mode in ["dcbf", "r1cbf", "r2cbf", "rdcbf"] {
        assert_eq!(stdout.lines().filter(|l| l.starts_with(mode)).count(), 1, "{stdout}");
        let agg = read_json(out.path().join(format!("scenario_a_{mode}.json")));
        assert_eq!(agg["runs"], 1);
    }
    assert_eq!(read_json(out.path().join("bench.json"))["runs"].as_array().unwrap().len(), 4);
}

#[test]
fn bench_rejects_unknown_modes_and_zero_runs() {
    let scenario = data("scenario_a.json");
    let s = scenario.to_str().unwrap();
    assert_eq!(code(&rdcbf(&["bench", "--scenario", s, "--mode", "rdcbf,apf"])), 3);
    assert_eq!(code(&rdcbf(&["bench", "--scenario", s, "--runs", "0"])), 3);
    assert_eq!(code(&rdcbf(&["run", "--scenario", s, "--gamma", "fast"])), 3);
}

#[test]
fn fuzz_single_instance() {
    let o = rdcbf(&["fuzz-geometry", "--runs", "1"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("instances per query: 1"));
    assert_eq!(code(&rdcbf(&["fuzz-geometry", "--runs", "0"])), 3);
}

#[test]
fn fuzz_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let oa = rdcbf(&["fuzz-geometry", "--runs", "500", "--seed", "9", "--out", a.to_str().unwrap()]);
    let ob = rdcbf(&["fuzz-geometry", "--runs", "500", "--seed", "9", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&oa), 0);
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(read_json(a), read_json(b));
}
