//! The binary's exit codes, summaries and output files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bimetric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bimetric"))
        .args(args)
        .env_remove("BIMETRIC_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(bimetric(&["--help"]).status.code(), Some(0));
    let v = bimetric(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains(bimetric_core::VERSION));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bimetric(&["bogus"]).status.code(), Some(2));
    assert_eq!(bimetric(&[]).status.code(), Some(2));
    assert_eq!(
        bimetric(&["entropy", "--state", "ghz"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bimetric(&["metric", "--gradient", "0,1"]).status.code(),
        Some(2)
    );
    let o = bimetric(&["trace", "--set", "lattice.pointz=7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lattice.pointz"));
}

#[test]
fn bell_entropy_is_ln_two() {
    let o = bimetric(&["entropy", "--state", "bell"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.6931471805599453"), "{}", stdout(&o));
}

#[test]
fn entropy_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = bimetric(&[
        "entropy",
        "--state",
        "product",
        "--format",
        "json",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["entropy_a_nats"], 0.0);
}

#[test]
fn metric_summary_uses_config_beta() {
    let o = bimetric(&["metric", "--gradient", "0,0.5,0,0", "--set", "beta=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // det q = -(1 + 2 * (-0.25)) = -0.5
    assert!(
        stdout(&o).contains("det q = -5.000000000000e-1"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn geneva_scenario_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("geneva.csv");
    let cfg = configs().join("geneva.json");
    let o = bimetric(&[
        "scenario",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("arrival 2.4461e-9"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with(bimetric_core::scenarios::CSV_HEADER));
}

#[test]
fn decoupled_trace_is_luminal() {
    let o = bimetric(&["trace", "--set", "gamma=0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("factor 1.000000"), "{}", stdout(&o));
}

#[test]
fn unstable_evolution_exits_four_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let o = bimetric(&[
        "evolve",
        "--set",
        "potential.mass=1e6",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("instability"), "{}", stderr(&o));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn cfl_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let o = bimetric(&[
        "evolve",
        "--set",
        "lattice.dt=1e-6",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("dt"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn bad_config_files_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"separation": 11000, "colour": "blue"}"#).unwrap();
    assert_eq!(
        bimetric(&["trace", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        bimetric(&["trace", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        bimetric(&["trace", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn evolve_writes_one_row_per_site() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let o = bimetric(&[
        "evolve",
        "--set",
        "lattice.num_points=256",
        "--set",
        "separation=2000",
        "--set",
        "profile_width=40",
        "--set",
        "steps=50",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 257);
    assert!(csv.starts_with("x,phi,pi"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("intervening_mass.json");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = bimetric(&[
            "scenario",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "lattice.num_points=1024",
            "--set",
            "separation=2000",
            "--set",
            "profile_width=40",
            "--format",
            "json",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (stdout(&o), std::fs::read(out).unwrap())
    };
    assert_eq!(run("one.json"), run("two.json"));
}
