//! Exit-code contract and edge-case behavior of the command-line surface.

use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_motcount");

const DETECTION: &str = r#"
seed = 31415
[detection]
gamma_hz = 6.0e6
detuning_hz = 6.0e6
s0 = 6.65
eta = 0.0471
tau_det_s = 0.09
tau_hold_s = 0.22
[trap]
tau_life_s = 540.0
r_load_per_s = 0.014
p_survival = 0.9666
alpha_sqrt_s = 7.6e-4
bkg_var_atoms = 8.4e-4
[run]
n_images = 11
n_runs = 1
counts_per_atom_per_s = 6.0e5
initial_atoms = { poisson = 2.5 }
"#;

const STABILIZATION_TAIL: &str = r#"
[pulse]
enabled = true
duration_s = 0.003
placement_s = 0.0
[controller]
threshold_atoms = 7.5
target_atoms = 7
n_verify = 4
max_steps = 100
"#;

struct Invocation {
    code: i32,
    stdout: String,
    stderr: String,
}

fn motcount(args: &[&str]) -> Invocation {
    let out = Command::new(BIN).args(args).output().expect("spawn motcount");
    Invocation {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_config_is_a_config_error() {
    let r = motcount(&["simulate", "--config", "/nonexistent/x.toml", "--out", "/tmp/unused"]);
    assert_eq!(r.code, 2, "stderr: {}", r.stderr);
}

#[test]
fn bad_flags_exit_with_usage_error() {
    let r = motcount(&["simulate", "--no-such-flag"]);
    assert_eq!(r.code, 2);
}

#[test]
fn invalid_parameter_values_are_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &DETECTION.replace("p_survival = 0.9666", "p_survival = 1.5"));
    let r = motcount(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(r.code, 3, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("p_survival"));
}

#[test]
fn minimal_simulation_writes_one_trace_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DETECTION);
    let out = dir.path().join("out");
    let r = motcount(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let trace = std::fs::read_to_string(out.join("trace_00000.csv")).unwrap();
    assert_eq!(trace.lines().count(), 12); // header + 11 images
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["seed"], 31415);
}

#[test]
fn single_run_analysis_is_refused_with_guidance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DETECTION);
    let out = dir.path().join("traces");
    motcount(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let r = motcount(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--traces",
        out.to_str().unwrap(),
        "--out",
        dir.path().join("an").to_str().unwrap(),
    ]);
    assert_eq!(r.code, 3, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("calibration refused"), "stderr: {}", r.stderr);
}

#[test]
fn corrupted_trace_file_gives_partial_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &DETECTION.replace("n_runs = 1", "n_runs = 120"),
    );
    let traces = dir.path().join("traces");
    let r = motcount(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        traces.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    std::fs::write(traces.join("trace_00007.csv"), "not,a,trace\n1,2,3\n").unwrap();

    let out = dir.path().join("an");
    let r = motcount(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--traces",
        traces.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--k-peaks",
        "6",
    ]);
    assert_eq!(r.code, 4, "stderr: {}", r.stderr);
    // the analysis itself completed on the surviving files
    assert!(out.join("calibration.json").exists());
    assert!(out.join("estimates.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn stabilize_with_threshold_above_initial_stops_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}{}",
        DETECTION.replace("initial_atoms = { poisson = 2.5 }", "initial_atoms = { fixed = 5 }")
            .replace("n_runs = 1", "n_runs = 6"),
        STABILIZATION_TAIL.replace("threshold_atoms = 7.5", "threshold_atoms = 100.0")
    );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("stab");
    let r = motcount(&[
        "stabilize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_completed"], 6);
    // every run stopped on its very first image: 1 + n_verify samples, and
    // the fidelity is still measured against the 7-atom target
    assert_eq!(report["fidelity"], 0.0);
    assert!(report["p_survival_fit"].is_null());
    let trace = std::fs::read_to_string(out.join("trace_00000.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 5);
}

#[test]
fn stabilize_without_verification_images() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}{}",
        DETECTION
            .replace("initial_atoms = { poisson = 2.5 }", "initial_atoms = { poisson = 15.0 }")
            .replace("n_runs = 1", "n_runs = 8"),
        STABILIZATION_TAIL.replace("n_verify = 4", "n_verify = 0")
    );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("stab");
    let r = motcount(&[
        "stabilize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_completed"], 8);
    assert!(report["fidelity"].as_f64().unwrap() > 0.0);
}

#[test]
fn stabilize_requires_controller_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DETECTION);
    let r = motcount(&[
        "stabilize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(r.code, 2, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("controller"));
}

#[test]
fn report_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DETECTION);
    let out = dir.path().join("out");
    motcount(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let ok = motcount(&["report", "--dir", out.to_str().unwrap()]);
    assert_eq!(ok.code, 0, "stderr: {}", ok.stderr);
    assert!(ok.stdout.contains("digests ok"));

    // JSON output parses
    let js = motcount(&["report", "--dir", out.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&js.stdout).unwrap();
    assert_eq!(v["digests_ok"], true);

    let trace_path = out.join("trace_00000.csv");
    let mut text = std::fs::read_to_string(&trace_path).unwrap();
    text.push_str("tampered\n");
    std::fs::write(&trace_path, text).unwrap();
    let bad = motcount(&["report", "--dir", out.to_str().unwrap()]);
    assert_eq!(bad.code, 3, "stderr: {}", bad.stderr);
    assert!(bad.stdout.contains("MISMATCH"));
}

#[test]
fn missing_traces_dir_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DETECTION);
    let r = motcount(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--traces",
        "/nonexistent/traces",
        "--out",
        dir.path().join("an").to_str().unwrap(),
    ]);
    assert_eq!(r.code, 5, "stderr: {}", r.stderr);
}

#[test]
fn calibrate_with_unreachable_scale_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &DETECTION.replace("initial_atoms = { poisson = 2.5 }", "initial_atoms = { fixed = 6 }"),
    );
    let traces = dir.path().join("traces");
    motcount(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        traces.to_str().unwrap(),
    ]);
    // nominal an octave away from truth with a 5 % window: nothing to find
    let r = motcount(&[
        "calibrate",
        "--config",
        cfg.to_str().unwrap(),
        "--traces",
        traces.to_str().unwrap(),
        "--out",
        dir.path().join("cal").to_str().unwrap(),
        "--nominal-cps",
        "1.2e6",
        "--window",
        "0.05",
    ]);
    assert_eq!(r.code, 3, "stderr: {}", r.stderr);
}
