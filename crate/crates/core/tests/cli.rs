use std::path::Path;
use std::process::{Command, Output};

use lacuna::cli::{config_hash, run, Command as Sub, RunConfig};

fn lacuna(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

const HADAMARD_Q3: &str = r#"{"system": {"kind": "hadamard", "ratio": 3, "count": 3, "modulus": 1000}, "d": 2}"#;

#[test]
fn check_dissociated_hadamard_ratio_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = lacuna(dir.path(), &["check-dissociated"], HADAMARD_Q3);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/check_dissociated.json")).unwrap()).unwrap();
    assert_eq!(doc["result"]["report"]["dissociated"], true);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    let cfg = RunConfig::from_json(HADAMARD_Q3).unwrap();
    assert_eq!(doc["config_hash"], config_hash(Sub::CheckDissociated, &cfg));
}

#[test]
fn degenerate_extract_points_to_expectation_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"orders": [4, 4], "characters": [[1, 0], [0, 1]], "d": 2, "polynomials": 1, "y_samples": 1}"#;
    let out = lacuna(dir.path(), &["extract-verify"], cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("order 4") && err.contains("expectation"), "{err}");

    let cfg = r#"{"orders": [4, 4], "characters": [[1, 0], [0, 1]], "d": 2, "polynomials": 1, "expectation": true}"#;
    let out = lacuna(dir.path(), &["extract-verify"], cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn zero_trials_is_config_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let out = lacuna(dir.path(), &["khinchin"], r#"{"system": {"kind": "rademacher", "p": 2, "count": 6}, "d": 1, "trials": 0}"#);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));
}

#[test]
fn missing_config_and_bad_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lacuna")).arg("nu-solve").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = lacuna(dir.path(), &["nu-solve"], "{not json");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_dissociated_system_is_a_module_error_for_riesz() {
    let dir = tempfile::tempdir().unwrap();
    let out = lacuna(dir.path(), &["riesz-report"], r#"{"orders": [5], "characters": [[1], [2]], "d": 2}"#);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not 2-dissociated"));
}

#[test]
fn csv_outputs_carry_header_and_parse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": {"kind": "rademacher", "p": 2, "count": 4}, "d": 2, "chaos": "tetrahedral", "trials": 2, "m_grid": [6, 16]}"#;
    let out = lacuna(dir.path(), &["discretize-scan", "--svg"], cfg);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("out/discretize_scan.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("# config_hash "));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["m", "trial", "C1", "C2", "q", "N", "seed"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| &r[0] == "16") {
        assert!((r[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
    let svg = std::fs::read_to_string(dir.path().join("out/discretize_scan.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("config_hash"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": {"kind": "rademacher", "p": 2, "count": 4}, "d": 1, "trials": 2, "seed": 5}"#;
    lacuna(dir.path(), &["khinchin", "--seed", "9"], cfg);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/khinchin.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["seed"], 9);
    assert_eq!(doc["result"]["seed"], 9);
}

#[test]
fn library_run_reports_nu_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(r#"{"system": {"kind": "rademacher", "p": 7, "count": 2}, "d": 3}"#).unwrap();
    let outcome = run(Sub::NuSolve, cfg, dir.path(), false).unwrap();
    assert!(outcome.violations.is_empty(), "{:?}", outcome.violations);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("nu_solve.json")).unwrap()).unwrap();
    let nu = doc["result"]["nu"].as_array().unwrap();
    assert_eq!(nu.len(), 3);
    for rec in nu {
        assert!(rec["indicator_law_error"].as_f64().unwrap() < 1e-8);
        assert!(rec["measured_total_variation"].as_f64().unwrap() <= rec["variation_bound"].as_f64().unwrap() * (1.0 + 1e-12));
    }
}

#[test]
fn sidon_sharpness_study_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"d": 2, "trials": 2, "m_grid": [4, 5]}"#;
    let out = lacuna(dir.path(), &["sidon"], cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/sidon_sharpness.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}
