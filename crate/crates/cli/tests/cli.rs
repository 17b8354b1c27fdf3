//! End-to-end tests of the binary: artifact layout, exit codes and
//! determinism of the emitted files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lions-kit")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("config written");
    path
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lions-kit-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

const DECAY: &str = r#"{
  "mode": "solve",
  "problem": {
    "dimension": 1,
    "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
    "source": {"preset": "zero"},
    "phi": {"preset": "initial"},
    "y0": [1.0],
    "horizon": 1.0
  },
  "discretization": {"steps": 128, "theta": 1.0}
}"#;

#[test]
fn solve_decay_writes_trajectory_and_diagnostics() {
    let dir = temp_dir("decay");
    let config = write_config(&dir, "decay.json", DECAY);
    let out = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,u_1");
    let last = csv.lines().last().unwrap();
    let u_final: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    // backward Euler at N = 128 lands within first-order distance of e^-1
    assert!((u_final - (-1.0f64).exp()).abs() < 2e-3, "u(1) = {u_final}");

    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("diagnostics.json")).unwrap())
            .unwrap();
    for key in [
        "n",
        "steps",
        "theta",
        "boundary_residual",
        "stepping_residual",
        "w_norm",
        "propagator_norm",
        "stability_constant",
        "wall_time_s",
    ] {
        assert!(diag.get(key).is_some(), "diagnostics missing {key}");
    }
    assert!(diag["boundary_residual"].as_f64().unwrap() < 1e-10);
    assert!(diag["propagator_norm"].as_f64().unwrap() < 1.0);
    assert!(diag["stability_constant"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_periodic_forced_has_tiny_boundary_residual() {
    let dir = temp_dir("periodic");
    let config = write_config(
        &dir,
        "periodic.json",
        r#"{
  "problem": {
    "dimension": 1,
    "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
    "source": {"preset": "trigonometric", "cos_amp": [1.0], "sin_amp": [0.0], "omega": 6.283185307179586},
    "phi": {"preset": "periodic"},
    "horizon": 1.0
  },
  "discretization": {"steps": 64, "theta": 0.5}
}"#,
    );
    let out = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("diagnostics.json")).unwrap())
            .unwrap();
    assert!(diag["boundary_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn expanding_coupling_is_a_config_error() {
    let dir = temp_dir("badphi");
    let config = write_config(
        &dir,
        "bad.json",
        r#"{
  "problem": {
    "dimension": 1,
    "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
    "source": {"preset": "zero"},
    "phi": {"preset": "explicit", "matrix": [[1.5]]},
    "horizon": 1.0
  },
  "discretization": {"steps": 8, "theta": 1.0}
}"#,
    );
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("contraction"), "stderr: {stderr}");
    let parsed: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).expect("machine-readable error");
    assert_eq!(parsed["error"]["kind"], "config");
}

#[test]
fn verify_rtl_suite_passes_and_writes_report() {
    let dir = temp_dir("verify");
    let out = run(&[
        "verify",
        "--suite",
        "rtl",
        "--seed",
        "7",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS rtl::operator_dual_witnesses"));
    assert!(!stdout.contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report[0]["suite"], "rtl");
    assert_eq!(report[0]["pass"], true);
}

#[test]
fn corrupted_tolerances_fail_loudly() {
    let dir = temp_dir("tolzero");
    let config = write_config(
        &dir,
        "verify.json",
        r#"{ "mode": "verify", "verify": {"suite": "rtl", "seed": 7, "tolerance_scale": 0.0} }"#,
    );
    let out = run(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"));
    // the report still carries the witnesses (worst observed values)
    assert!(stdout.contains("worst="));
}

#[test]
fn converge_reports_scheme_orders() {
    let dir = temp_dir("converge");
    let config = write_config(
        &dir,
        "converge.json",
        r#"{
  "problem": {
    "dimension": 1,
    "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
    "source": {"preset": "manufactured", "solution": {"kind": "exp-decay", "rate": 1.0, "direction": [1.0]}},
    "phi": {"preset": "initial"},
    "horizon": 1.0
  },
  "converge": {"steps": [16, 32, 64, 128], "thetas": [1.0, 0.5]}
}"#,
    );
    let out = run(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "N,theta,error,order");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    // last refinement of each theta block shows the scheme order
    let order_euler: f64 = rows[3][3].parse().unwrap();
    assert!((order_euler - 1.0).abs() < 0.15, "order {order_euler}");
    let order_mid: f64 = rows[7][3].parse().unwrap();
    assert!((order_mid - 2.0).abs() < 0.2, "order {order_mid}");
}

#[test]
fn scaled_rotation_coupling_converges_in_two_dimensions() {
    let dir = temp_dir("rotation");
    let config = write_config(
        &dir,
        "rotation.json",
        r#"{
  "problem": {
    "dimension": 2,
    "form": {
      "preset": "trigonometric",
      "mean": [[2.0, 0.0], [0.0, 2.0]],
      "cos_amp": [[0.0, 0.0], [0.0, 0.0]],
      "sin_amp": [[1.0, 0.0], [0.0, 1.0]],
      "omega": 6.283185307179586,
      "alpha": 1.0,
      "bound": 3.0
    },
    "source": {
      "preset": "manufactured",
      "solution": {"kind": "trig", "cos_amp": [0.0, 1.0], "sin_amp": [1.0, 0.0], "omega": 6.283185307179586}
    },
    "phi": {"preset": "scaled-rotation", "factor": 0.5, "angle": 0.7853981633974483},
    "horizon": 1.0
  },
  "converge": {"steps": [32, 64, 128], "thetas": [0.5]}
}"#,
    );
    let out = run(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let order: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!((order - 2.0).abs() < 0.2, "midpoint order {order}");
}

#[test]
fn constant_solutions_mark_orders_not_applicable() {
    let dir = temp_dir("constant");
    let config = write_config(
        &dir,
        "constant.json",
        r#"{
  "problem": {
    "dimension": 1,
    "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
    "source": {"preset": "manufactured", "solution": {"kind": "constant", "value": [0.8]}},
    "phi": {"preset": "periodic"},
    "horizon": 1.0
  },
  "converge": {"steps": [8, 16], "thetas": [1.0]}
}"#,
    );
    let out = run(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let error: f64 = cells[2].parse().unwrap();
        assert!(error < 1e-12, "constants must be reproduced exactly");
        assert_eq!(cells[3], "na");
    }
}

#[test]
fn non_manufactured_converge_is_rejected() {
    let dir = temp_dir("badconv");
    let config = write_config(
        &dir,
        "bad.json",
        r#"{
  "problem": {
    "dimension": 1,
    "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
    "source": {"preset": "zero"},
    "phi": {"preset": "initial"},
    "horizon": 1.0
  },
  "converge": {"steps": [8, 16], "thetas": [1.0]}
}"#,
    );
    let out = run(&["converge", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_configs_produce_identical_artifacts() {
    let dir_a = temp_dir("det-a");
    let dir_b = temp_dir("det-b");
    let config = write_config(&dir_a, "decay.json", DECAY);
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let csv_a = std::fs::read(dir_a.join("trajectory.csv")).unwrap();
    let csv_b = std::fs::read(dir_b.join("trajectory.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "trajectories must be byte-identical");

    let strip_wall = |path: PathBuf| -> String {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("wall_time_s"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip_wall(dir_a.join("diagnostics.json")),
        strip_wall(dir_b.join("diagnostics.json")),
        "diagnostics must agree apart from the timing field"
    );

    // seeded verification reports are byte-identical outright
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "verify",
            "--suite",
            "rtl",
            "--seed",
            "11",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let rep_a = std::fs::read(dir_a.join("verify_report.json")).unwrap();
    let rep_b = std::fs::read(dir_b.join("verify_report.json")).unwrap();
    assert_eq!(rep_a, rep_b);
}
