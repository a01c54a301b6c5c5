//! End-to-end runs of the `weakkam1d` binary.

use std::path::Path;
use std::process::{Command, Output};

fn weakkam1d(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_weakkam1d"));
    cmd.args(args).env_remove("WEAKKAM1D_OUT");
    if let Some(dir) = out {
        cmd.env("WEAKKAM1D_OUT", dir);
    }
    cmd.output().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn list_has_six_scenarios() {
    let out = weakkam1d(&["list"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for name in ["E0", "E1", "E2", "E2b", "E3", "appendix"] {
        assert!(rows.iter().any(|r| r.split_whitespace().next() == Some(name)), "{name}");
    }
}

#[test]
fn malformed_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"scenario\": ").unwrap();
    let unknown_key = dir.path().join("unknown.json");
    std::fs::write(&unknown_key, "{ \"scenaryo\": \"E3\" }").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--config", bad.to_str().unwrap()],
        vec!["run", "--config", unknown_key.to_str().unwrap()],
        vec!["run", "--scenario", "E9"],
        vec!["run", "--lambdas", "0.1,0.2"],
        vec!["check", "--grid.n", "two"],
        vec!["run", "--scenario"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = weakkam1d(&args, Some(dir.path()));
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn e3_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = weakkam1d(&["run", "--scenario", "E3", "--lambda-min", "0.0125"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(dir.path());
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["case_report"]["case_tag"], "III");
    for f in ["profiles.csv", "measures.csv", "convergence.csv", "sweep.dat"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.starts_with("# schema_version: 1\n"), "{f}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("PASS sweep_error")));
}

#[test]
fn appendix_run_records_positive_integral() {
    let dir = tempfile::tempdir().unwrap();
    let out = weakkam1d(&["run", "--scenario", "appendix", "--eps1", "1e-3"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let rep = report(dir.path());
    assert!(rep["appendix"]["min_integral"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("appendix.csv").exists());
}

#[test]
fn check_reports_failures_with_exit_one() {
    // E1 misses the sweep tolerance at the default lambda floor
    let out = weakkam1d(&["check", "--scenario", "E1", "--checks", "sweep"], None);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL sweep_error")));
}

#[test]
fn env_var_overrides_outputs_key() {
    let env_dir = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let out = weakkam1d(
        &["run", "--scenario", "appendix", "--outputs", cfg_dir.path().to_str().unwrap()],
        Some(env_dir.path()),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.path().join("report.json").exists());
    assert!(!cfg_dir.path().join("report.json").exists());
}
