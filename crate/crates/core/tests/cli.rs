use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn branchflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branchflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .env_remove("BRANCHFLOW_OUT")
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn check_data_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchflow(&["check-data", "--eps", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("check_data.csv"));
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    for want in ["divergence_relative", "vorticity_axial_relative", "decay_constant_c0", "singularity_slope_error"] {
        assert!(names.contains(&want), "{names:?}");
    }
    let div = rows.iter().find(|r| r[0] == "divergence_relative").unwrap();
    assert!(div[1].parse::<f64>().unwrap() <= 1e-8);
    assert!(dir.path().join("config.json").exists());
    assert!(dir.path().join("snapshots/data_c2.json").exists());
}

#[test]
fn integral_bound_prints_value_and_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchflow(&["integral-bound", "--delta", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("I = 6.83559118097417"), "{text}");
    assert!(text.contains("I/delta = 6.83559118097417"), "{text}");
    let rows = csv_rows(&dir.path().join("integral_bound.csv"));
    let value: f64 = rows[0][3].parse().unwrap();
    assert!((value - 6.835_591_180_974_174_2e-3).abs() <= 1e-15);
}

#[test]
fn zero_data_solves_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchflow(&["solve", "--amplitude", "0", "--N", "8", "--M", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["contraction.csv", "norms.csv", "residual.csv", "summary.json", "snapshots/v_m004_c0.bin"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["residual_sup"], 0.0);
    let bytes = fs::read(dir.path().join("snapshots/v_m004_c0.bin")).unwrap();
    assert_eq!(bytes.len(), 8 * 8 * 8 * 8);
    assert!(bytes.iter().all(|&b| b == 0));
}

#[test]
fn invalid_configuration_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchflow(&["check-data", "--eps", "0.3", "--N", "7"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("eps") && err.contains("N:"), "{err}");
    let out = branchflow(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let out = Command::new(env!("CARGO_BIN_EXE_branchflow")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["check-data", "solve", "contraction", "witness", "integral-bound"] {
        assert!(text.contains(sub), "{text}");
    }
}

#[test]
fn config_file_and_env_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"N": 16, "eps": 0.05, "delta": [2.0]}"#).unwrap();
    let env_out = dir.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_branchflow"))
        .args(["integral-bound", "--N", "8", "--config"])
        .arg(&cfg)
        .env("BRANCHFLOW_OUT", &env_out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let echoed: serde_json::Value = serde_json::from_slice(&fs::read(env_out.join("config.json")).unwrap()).unwrap();
    assert_eq!(echoed["N"], 8);
    assert_eq!(echoed["eps"], 0.05);
    assert_eq!(echoed["delta"], serde_json::json!([2.0]));
    assert_eq!(echoed["subcommand"], "integral-bound");

    fs::write(&cfg, r#"{"N": 16, "colour": "red"}"#).unwrap();
    let out = branchflow(&["check-data", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["solve", "--data", "smooth", "--N", "8", "--M", "5", "--threads", "1"];
    assert_eq!(branchflow(&args, a.path()).status.code(), Some(0));
    assert_eq!(branchflow(&args, b.path()).status.code(), Some(0));
    for name in ["contraction.csv", "norms.csv", "residual.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn reversed_solve_reports_path_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchflow(&["solve", "--reverse", "--data", "smooth", "--N", "8", "--M", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["path_gap"].as_f64().unwrap() <= 1e-10);
}
