use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pconvex::cli::report::body_of;
use pconvex::fixedpoint::certificate::Certificate;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pconvex"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path
}

const BASE: &str = r#"{
  "name": "t", "seed": 1,
  "space": { "dim": 2, "p": P },
  "body": { "key": "pball" },
  "tasks": [ { "op": "eval_gauge", "params": { "points": [[0.5, 0.5]] } } ]
}"#;

#[test]
fn missing_file_exits_2() {
    let out = run(&["run", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_p_exits_3_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for p in ["0", "1.5", "-0.2"] {
        let cfg = write_config(dir.path(), &BASE.replace("P", p));
        let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(3), "p = {p}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("space.p") && err.contains("p must lie in (0,1]"), "{err}");
    }
}

#[test]
fn unknown_keys_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (BASE.replace("P", "0.5").replace("\"pball\"", "\"hexagon\""), "body.key"),
        (BASE.replace("P", "0.5").replace("\"seed\": 1,", "\"seed\": 1, \"colour\": 3,"), "colour"),
        (BASE.replace("P", "0.5").replace("eval_gauge", "nonsense_op"), "tasks[0].op"),
    ];
    for (text, field) in cases {
        let cfg = write_config(dir.path(), &text);
        let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(3));
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn valid_run_writes_report_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", scenario("translation_best_approx").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "pconvex-report/1");
    assert!(report["timing"]["wall_clock_ms"].is_u64());
    for t in report["tasks"].as_array().unwrap() {
        for trace in t["traces"].as_array().unwrap() {
            let csv = std::fs::read_to_string(dir.path().join(trace.as_str().unwrap())).unwrap();
            assert!(csv.lines().count() > 1);
        }
    }
}

#[test]
fn report_bodies_are_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenario("fixed_points");
    assert!(run(&["run", cfg.to_str().unwrap(), "--seed", "11", "--out", a.path().to_str().unwrap()]).status.success());
    assert!(run(&["run", cfg.to_str().unwrap(), "--seed", "11", "--parallel", "--out", b.path().to_str().unwrap()]).status.success());
    let read = |d: &Path| -> Value { serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap() };
    let (ra, rb) = (read(a.path()), read(b.path()));
    assert_eq!(serde_json::to_string(&body_of(&ra)).unwrap(), serde_json::to_string(&body_of(&rb)).unwrap());
    assert_eq!(ra["seed"], 11);
}

#[test]
fn certificates_revalidate_from_report() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["run", scenario("translation_best_approx").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]).status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let cert: Certificate = serde_json::from_value(report["tasks"][0]["result"]["certificate"].clone()).unwrap();
    assert!(cert.revalidate());
    let mut forged = cert.clone();
    forged.checks[0].lhs += 1e-6;
    assert!(!forged.revalidate());
}

#[test]
fn list_filters_by_substring() {
    let out = run(&["list", "ball"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let names: Vec<_> = text.lines().map(|l| l.split_whitespace().nth(1).unwrap().split('(').next().unwrap()).collect();
    assert_eq!(names, ["pball", "ball"]);
    let all = run(&["list"]);
    assert!(String::from_utf8_lossy(&all.stdout).lines().count() > 20);
}
