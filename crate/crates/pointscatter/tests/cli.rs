//! Black-box tests of the `pointscatter` binary: exit-code contract,
//! override precedence, artifact shape, and determinism.

use std::path::Path;
use std::process::Output;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pointscatter")
}

fn run(args: &[&str], dir: &Path) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

const BASE_CFG: &str = r#"{"potential": {"kind": "radial_bump", "c": 1.0, "m": 2}}"#;

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["verify-prop21", "--config", "nope.json", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_exits_3_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"potentail": {"kind": "radial_bump", "c": 1.0, "m": 2}}"#,
    )
    .unwrap();
    let out = run(
        &["verify-prop21", "--config", "cfg.json", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("potentail"), "stderr was: {stderr}");
}

#[test]
fn unknown_command_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), BASE_CFG).unwrap();
    let out = run(
        &["transmogrify", "--config", "cfg.json", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unmet_tolerance_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), BASE_CFG).unwrap();
    let out = run(
        &[
            "verify-prop21",
            "--config",
            "cfg.json",
            "--set",
            "taus=[0.5]",
            "--set",
            "tolerance=1e-15",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(5));
    // The summary artifact is still written, with pass = false.
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["pass"], serde_json::Value::Bool(false));
}

#[test]
fn overrides_beat_file_and_land_in_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), BASE_CFG).unwrap();
    let out = run(
        &[
            "verify-prop21",
            "--config",
            "cfg.json",
            "--set",
            "potential.c=0.5",
            "--set",
            "taus=[0.5]",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["effective_config"]["potential"]["c"], 0.5);
    assert_eq!(summary["input_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), BASE_CFG).unwrap();
    let args = [
        "gronwall-report",
        "--config",
        "cfg.json",
        "--set",
        "gronwall.n_s=20",
        "--out",
    ];
    for out_dir in ["o1", "o2"] {
        let mut a: Vec<&str> = args.to_vec();
        a.push(out_dir);
        assert_eq!(run(&a, dir.path()).status.code(), Some(0));
    }
    for name in ["summary.json", "gronwall.csv"] {
        let b1 = std::fs::read(dir.path().join("o1").join(name)).unwrap();
        let b2 = std::fs::read(dir.path().join("o2").join(name)).unwrap();
        assert_eq!(b1, b2, "{name} differs between identical reruns");
    }
}

#[test]
fn forward_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), BASE_CFG).unwrap();
    let out = run(
        &[
            "forward",
            "--config",
            "cfg.json",
            "--set",
            "solver.delta=0.03125",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(dir.path().join("o/trace.csv")).unwrap();
    assert!(trace.starts_with("t,value\n"));
    assert!(trace.lines().count() > 10);
}
