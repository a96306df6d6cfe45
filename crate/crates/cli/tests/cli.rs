use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qab_core::paths::qab_1d_analytic;
use serde_json::Value;
use tempfile::TempDir;

fn qab(args: &[&str], config: Option<&str>, dir: &TempDir) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qab"));
    cmd.args(args).current_dir(dir.path());
    if let Some(text) = config {
        let path = dir.path().join("config.json");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn out_dir(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn num(cell: &str) -> f64 {
    cell.parse().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_with_defaults_passes() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["verify", "--out", "v"], None, &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    let report = json(&out_dir(&dir, "v").join("verify_report.json"));
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_detects_perturbed_gap() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["verify", "--out", "v"], Some(r#"{"test_hooks": {"gap_offset": 1e-3}}"#), &dir);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL metric_vs_trace"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["geodesic", "--out", "g"], Some(r#"{"paths": ["rc"], "colour": "red"}"#), &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir(&dir, "g").exists());
}

#[test]
fn empty_path_list_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["sweep", "--out", "s"], Some(r#"{"paths": []}"#), &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir(&dir, "s").exists());
}

#[test]
fn geodesic_n1_endpoints() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "grover", "n": 1}, "paths": ["geo2"]}"#;
    let out = qab(&["geodesic", "--out", "g"], Some(cfg), &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&out_dir(&dir, "g").join("path_geo2.csv"));
    assert_eq!(header, ["s", "x1", "x2", "xdot1", "xdot2"]);
    assert_eq!(rows.len(), 2001);
    let (first, last) = (&rows[0], &rows[2000]);
    assert!((num(&first[1]) - 1.0).abs() < 1e-8 && num(&first[2]).abs() < 1e-8);
    assert!(num(&last[1]).abs() < 1e-8 && (num(&last[2]) - 1.0).abs() < 1e-8);
    let summary = json(&out_dir(&dir, "g").join("geodesic_summary.json"));
    let geo = &summary["paths"][0];
    assert!(geo["endpoint_residual"].as_f64().unwrap() < 1e-8);
    assert!(geo["speed_deviation"].as_f64().unwrap() < 1e-5);
}

#[test]
fn rc_csv_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "grover", "n": 6}, "paths": ["rc"]}"#;
    let out = qab(&["geodesic", "--out", "g"], Some(cfg), &dir);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = read_csv(&out_dir(&dir, "g").join("path_rc.csv"));
    for row in rows.iter().step_by(50) {
        let x = qab_1d_analytic(0.125, num(&row[0]));
        assert!((num(&row[2]) - x).abs() < 1e-14);
        assert!((num(&row[1]) - (1.0 - x)).abs() < 1e-14);
    }
}

#[test]
fn toeplitz_geo1_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "toeplitz", "size": 16}, "paths": ["geo1"]}"#;
    let out = qab(&["geodesic", "--out", "g"], Some(cfg), &dir);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out_dir(&dir, "g").join("geodesic_summary.json"));
    assert!((summary["alpha0"].as_f64().unwrap() - (2.0f64 / 16.0).sqrt()).abs() < 1e-10);
    assert!(summary["paths"][0]["t_nat"].as_f64().unwrap().is_finite());
}

#[test]
fn shooting_failure_exits_three_with_manifest() {
    let dir = TempDir::new().unwrap();
    // one Newton iteration and no escalation cannot reach the tolerance
    let cfg = r#"{"problem": {"kind": "grover", "n": 3}, "paths": ["rc", "geo2"],
                  "shooting": {"max_iterations": 1, "segments": [1]}}"#;
    let out = qab(&["geodesic", "--out", "g"], Some(cfg), &dir);
    assert_eq!(out.status.code(), Some(3));
    let manifest = json(&out_dir(&dir, "g").join("manifest.json"));
    let tasks = manifest["tasks"].as_array().unwrap();
    assert!(tasks.iter().any(|t| t["name"] == "path:geo2" && t["status"] == "failed"));
    assert!(out_dir(&dir, "g").join("path_rc.csv").exists());
}

#[test]
fn manifest_lists_existing_files_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "grover", "n": 2}, "paths": ["rc", "linear"]}"#;
    let out = qab(&["geodesic", "--out", "g", "--steps", "500"], Some(cfg), &dir);
    assert_eq!(out.status.code(), Some(0));
    let manifest = json(&out_dir(&dir, "g").join("manifest.json"));
    for f in manifest["files"].as_array().unwrap() {
        assert!(out_dir(&dir, "g").join(f.as_str().unwrap()).exists());
    }
    assert_eq!(manifest["config"]["steps_per_unit"], 500);
    let echo = serde_json::to_string(&manifest["config"]).unwrap();
    let back = qab_cli::ExperimentConfig::from_json(&echo).unwrap();
    back.validate().unwrap();
    assert_eq!(serde_json::to_value(&back).unwrap(), manifest["config"]);
}

const SMALL_SWEEP: &str = r#"{"problem": {"kind": "grover", "n": 1}, "paths": ["geo2", "geo4"],
    "t_grid": {"min": 1, "max": 50, "count": 12}, "steps_per_unit": 1000,
    "shooting": {"steps_per_unit": 500}}"#;

#[test]
fn sweep_layout_and_convergence_record() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["sweep", "--out", "s"], Some(SMALL_SWEEP), &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&out_dir(&dir, "s").join("sweep.csv"));
    assert_eq!(header, ["T", "geo2", "geo4"]);
    assert_eq!(rows.len(), 12);
    assert!(rows.windows(2).all(|w| num(&w[0][0]) < num(&w[1][0])));
    let manifest = json(&out_dir(&dir, "s").join("manifest.json"));
    let conv = manifest["tasks"].as_array().unwrap().iter().find(|t| t["name"] == "convergence").unwrap();
    assert_eq!(conv["details"]["sentinels"].as_array().unwrap().len(), 3);
    assert!(conv["details"]["max_deviation"].as_f64().unwrap() < 1e-3);
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let a = qab(&["sweep", "--out", "a", "--threads", "1"], Some(SMALL_SWEEP), &dir);
    let b = qab(&["sweep", "--out", "b", "--threads", "3"], Some(SMALL_SWEEP), &dir);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let csv_a = fs::read(out_dir(&dir, "a").join("sweep.csv")).unwrap();
    let csv_b = fs::read(out_dir(&dir, "b").join("sweep.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn curvature_map_grid() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["curvature-map", "--out", "c"], Some(r#"{"problem": {"kind": "grover", "n": 3}}"#), &dir);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&out_dir(&dir, "c").join("curvature_grid.csv"));
    assert_eq!(header, ["x1", "x2", "r1212", "gaussian", "masked"]);
    assert_eq!(rows.len(), 4096);
    assert!(rows.iter().any(|r| r[4] == "1"));
    for i in 0..64 {
        for j in 0..i {
            let (a, b) = (&rows[i * 64 + j], &rows[j * 64 + i]);
            if a[4] == "0" && b[4] == "0" {
                let (ra, rb) = (num(&a[2]), num(&b[2]));
                assert!((ra - rb).abs() <= 1e-6 * ra.abs().max(rb.abs()), "{a:?} {b:?}");
            }
        }
    }
    for name in ["overlay_rc.csv", "overlay_geo2.csv", "overlay_critical_line.csv"] {
        assert!(out_dir(&dir, "c").join(name).exists());
    }
}

#[test]
fn flat_metric_has_no_curvature() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "custom-alpha0", "alpha0": 0.3, "dim": 4}, "paths": ["rc"],
                  "grid": {"x1": {"min": 0.1, "max": 1, "count": 16}, "x2": {"min": 0.1, "max": 1, "count": 16}},
                  "test_hooks": {"flat_metric": true}}"#;
    let out = qab(&["curvature-map", "--out", "c"], Some(cfg), &dir);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = read_csv(&out_dir(&dir, "c").join("curvature_grid.csv"));
    assert!(rows.iter().all(|r| r[4] == "0" && num(&r[2]).abs() < 1e-8));
}

#[test]
fn observables_orderings_n4() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["observables", "--out", "o"], Some(r#"{"problem": {"kind": "grover", "n": 4}}"#), &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let avg = json(&out_dir(&dir, "o").join("observables_averages.json"));
    let get = |p: &str, k: &str| avg["paths"][p]["averages"][k].as_f64().unwrap();
    assert!(get("rc", "r1212") > get("geo2", "r1212"));
    assert!(get("rc", "negativity12") > get("geo2", "negativity12"));
    let (header, rows) = read_csv(&out_dir(&dir, "o").join("observables_geo2.csv"));
    assert_eq!(header, ["s", "gap", "r1212", "negativity12", "block_entropy"]);
    assert_eq!(rows.len(), 201);
}

#[test]
fn negativity_needs_two_qubits() {
    let dir = TempDir::new().unwrap();
    let out = qab(&["observables", "--out", "o"], Some(r#"{"problem": {"kind": "grover", "n": 1}}"#), &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n >= 2"));
}
