use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SWEEP: &str = r#"{
    "kind": "chsh",
    "model": {"alpha_tilde": -1e-3, "length_scale_m": 1.0},
    "grid": {"dims": 1, "points_per_axis": 512, "extent": 100.0},
    "party_a": {"center": [0.0], "width": 0.5},
    "party_b": {"center": [0.0], "width": 1.0},
    "state": {"kind": "bell", "bell": "psi_minus"},
    "sweep": [{"parameter": "distance_b", "start": 0.0, "stop": 40.0, "steps": 30}],
    "seed": 3
}"#;

#[test]
fn verify_algebra_json() {
    let out = eup(&["verify-algebra", "--format", "json", "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let report = &json["algebra_report"];
    assert_eq!(report["max_alpha_order"], 2);
    assert!(report["theta"]["magnitude"].as_f64().unwrap() == 4.0);
    assert_eq!(json["contract_failures"], 0);
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = eup(&["chsh", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}

#[test]
fn unknown_subcommand_and_flag() {
    assert_eq!(eup(&["bogus"]).status.code(), Some(1));
    assert_eq!(eup(&["chsh", "--bogus"]).status.code(), Some(1));
    assert_eq!(eup(&["chsh", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(eup(&["--help"]).status.code(), Some(0));
}

#[test]
fn positive_alpha_has_no_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "as_alpha.json",
        r#"{"kind": "threshold", "model": {"alpha_tilde": 1e-3, "length_scale_m": 1.0}}"#,
    );
    let out = eup(&["threshold", "--config", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("no-threshold"));
}

#[test]
fn threshold_default_is_cosmological() {
    let out = eup(&["threshold", "--format", "json", "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let d = json["rows"][0]["distance_si_m"].as_f64().unwrap();
    assert!((d / 5.41e25 - 1.0).abs() < 5e-3);
}

#[test]
fn identical_seeds_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    for path in [&first, &second] {
        let out = eup(&[
            "chsh",
            "--config",
            &cfg,
            "--out",
            path.to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 31);
}

#[test]
fn seed_flag_is_recorded() {
    let out = eup(&["optimize", "--seed", "1234", "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("1234,"));
}

#[test]
fn guard_violation_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "wide.json",
        &SWEEP.replace("\"stop\": 40.0", "\"stop\": 48.0"),
    );
    let out = eup(&["chsh", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncation guard"));
    assert!(out.stdout.is_empty());
}

#[test]
fn mismatched_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    assert_eq!(eup(&["threshold", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn failed_contract_exits_with_two() {
    // For α < 0 the Gaussian gap is ≈ ½α(2σ² + ...) < 0, so the gap check fails.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "negative.json",
        r#"{"kind": "uncertainty-sweep",
            "model": {"alpha_tilde": -1e-3, "length_scale_m": 1.0},
            "grid": {"dims": 3, "points_per_axis": 32, "extent": 19.5},
            "party_a": {"center": [0.0, 0.0, 0.0], "width": 1.0}}"#,
    );
    let out = eup(&["uncertainty-sweep", "--config", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",false,"));
}
