//! End-to-end runs of the binary on tiny configurations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bratu_vqa_cli::csv::Table;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bratu-vqa-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bratu-vqa")).args(args).arg("--out").arg(out).output().unwrap()
}

fn tiny_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!("n_layers = 1\nn_qubits = 2\ngrid_points = 8\niterations = 3\nn_starts = 2\n{extra}");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn classical_writes_path_and_profiles() {
    let dir = scratch("classical");
    let out = run(&["classical", "--lambda", "1.0"], &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = Table::parse(&fs::read_to_string(dir.join("classical_path.csv")).unwrap()).unwrap();
    let lambdas = path.real_column("lambda").unwrap();
    let peak = lambdas.iter().copied().fold(f64::MIN, f64::max);
    assert!((peak - 3.5138307191).abs() < 1e-3);
    for b in ["lower", "upper"] {
        let f = dir.join(format!("classical_profile_{b}_lambda_1.0000.csv"));
        let t = Table::parse(&fs::read_to_string(f).unwrap()).unwrap();
        let u = t.real_column("u").unwrap();
        assert_eq!(u[0], 0.0);
        assert_eq!(*u.last().unwrap(), 0.0);
    }
    assert!(dir.join("classical.svg").exists());
    assert!(dir.join("manifest_classical.json").exists());
}

#[test]
fn solve_writes_report_and_profile() {
    let dir = scratch("solve");
    let cfg = tiny_config(&dir, "");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--lambda", "0.5"], &dir);
    // three iterations cannot reach the acceptance cost
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report_lower_lambda_0.5000.json")).unwrap()).unwrap();
    assert_eq!(report["cost_history"].as_array().unwrap().len(), 3);
    assert_eq!(report["weights"].as_array().unwrap().len(), 6);
    let profile = Table::parse(&fs::read_to_string(dir.join("profile_lower_lambda_0.5000.csv")).unwrap()).unwrap();
    assert_eq!(profile.header, ["x", "u_vqa", "u_classical", "abs_error"]);
    assert_eq!(profile.rows.len(), 10);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest_solve.json")).unwrap()).unwrap();
    assert_eq!(manifest["converged"], false);
    assert_eq!(manifest["config"]["n_layers"], 1);
}

#[test]
fn lambda_beyond_fold_is_a_config_error() {
    let dir = scratch("fold");
    let out = run(&["solve", "--lambda", "4.0"], &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fold"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = scratch("unknown");
    let cfg = tiny_config(&dir, "learning_rat = 0.1\n");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--lambda", "0.5"], &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = scratch("unwritable");
    let blocker = dir.join("file");
    fs::write(&blocker, "x").unwrap();
    let out = run(&["classical", "--lambda", "1.0"], &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_schedule_gives_header_only_diagram() {
    let dir = scratch("empty");
    let cfg = tiny_config(&dir, "lower_lambdas = []\n");
    let out = run(&["continue", "--config", cfg.to_str().unwrap(), "--branch", "lower"], &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("diagram_lower.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("branch,lambda,u_max"));
}

#[test]
fn seed_flag_overrides_config_file() {
    let dir = scratch("seed");
    let cfg = tiny_config(&dir, "seed = 5\n");
    let _ = run(&["solve", "--config", cfg.to_str().unwrap(), "--lambda", "0.5", "--seed", "9"], &dir);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest_solve.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
}
