use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const FOCK: &str = r#"{"builtin":"fock","alpha":1.0}"#;
const DISK: &str = r#"{"kind":"hyperbolic_ball","n":1,"kappa":1.0}"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_holo-interp"));
    cmd.env_remove("HOLO_INTERP_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_points(dir: &Path, name: &str, space: Value, points: &[[f64; 2]]) -> PathBuf {
    let values: Vec<[f64; 2]> = (0..points.len()).map(|i| [1.0, i as f64 * 0.25]).collect();
    let path = dir.join(name);
    let body = json!({ "space": space, "points": points, "values": values });
    fs::write(&path, serde_json::to_string(&body).unwrap()).unwrap();
    path
}

/// 5ℤ² truncated to |p| ≤ 10.
fn lattice5(dir: &Path) -> PathBuf {
    let mut pts = Vec::new();
    for i in -2..=2 {
        for j in -2..=2 {
            pts.push([5.0 * i as f64, 5.0 * j as f64]);
        }
    }
    write_points(dir, "lattice5.json", json!({"kind": "flat", "n": 1}), &pts)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn certify_t1_on_sparse_lattice_passes_and_writes_margins() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "certify-t1",
        "--points",
        pts.to_str().unwrap(),
        "--weight",
        FOCK,
        "--rho",
        "2",
        "--eps",
        "1",
        "--grid",
        "box:10:21",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&read(&out_dir, "certificate.json")).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["schema_version"], 1);
    assert!((report["worst_margin"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let csv = read(&out_dir, "certificate.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "index,re_1,im_1,required,available,margin,count,density");
    assert_eq!(lines.count(), 21 * 21);
}

#[test]
fn csv_values_carry_seventeen_significant_digits() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "certify-t1",
        "--points",
        pts.to_str().unwrap(),
        "--weight",
        FOCK,
        "--rho",
        "2",
        "--eps",
        "1",
        "--grid",
        "box:1:3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let csv = read(&out_dir, "certificate.csv");
    let row = csv.lines().nth(1).unwrap();
    let margin = row.split(',').nth(5).unwrap();
    let mantissa = margin.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{margin}");
    assert_eq!(margin.parse::<f64>().unwrap(), 0.5);
}

#[test]
fn failing_certificate_exits_one() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    // ε = 10 pushes the requirement above the available curvature 2.
    let out = run(&["certify-t1", "--points", pts.to_str().unwrap(), "--weight", FOCK, "--rho", "2", "--eps", "10"]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn density_of_empty_set_is_zero() {
    let out = run(&["density", "--space", DISK]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["density_sup"].as_f64().unwrap().to_bits(), 0.0f64.to_bits());
    assert_eq!(report["n_points"], 0);
}

#[test]
fn interpolate_near_coincident_points_trips_the_conditioning_guard() {
    let tmp = TempDir::new().unwrap();
    let pts = write_points(tmp.path(), "close.json", json!({"kind": "flat", "n": 1}), &[[0.0, 0.0], [1e-7, 0.0]]);
    let out = run(&["interpolate", "--points", pts.to_str().unwrap(), "--weight", FOCK]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eig_min"), "{err}");
}

#[test]
fn interpolate_well_separated_points_reproduces_values() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let out = run(&["interpolate", "--points", pts.to_str().unwrap(), "--weight", FOCK]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    // Raw values at |p| = 10√2 come from cancelling terms near e^50, so only the
    // weighted residual is held to machine precision here.
    assert!(report["weighted_residual"].as_f64().unwrap() < 1e-12);
    assert!(report["relative_residual"].as_f64().unwrap().is_finite());
    assert_eq!(report["scaled_coefficients"].as_array().unwrap().len(), 25);
}

#[test]
fn malformed_json_reports_line_and_column() {
    let out = run(&["density", "--space", "{\"kind\": \"hyperbolic_ball\",\n \"n\": }"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2 column 7"), "{err}");
}

#[test]
fn missing_required_flag_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let out = run(&["certify-t1", "--points", pts.to_str().unwrap(), "--weight", FOCK, "--eps", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rho"));
}

#[test]
fn space_mismatch_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let out = run(&["separation", "--points", pts.to_str().unwrap(), "--space", DISK]);
    assert_eq!(code(&out), 2);
}

#[test]
fn theorem2_report_flags_the_user_set_threshold() {
    let tmp = TempDir::new().unwrap();
    let pts = write_points(tmp.path(), "disk.json", json!(DISK.parse::<Value>().unwrap()), &[[0.0, 0.0], [0.5, 0.0]]);
    let weight = r#"{"builtin":"bergman","A":6.0,"kappa":1.0}"#;
    let out =
        run(&["certify-t2", "--points", pts.to_str().unwrap(), "--weight", weight, "--eps", "0.5", "--cutoff", "20"]);
    assert!(matches!(code(&out), 0 | 1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let warnings = report["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("user-set")));
    assert_eq!(report["density_threshold"].as_f64().unwrap(), 20.0);
}

fn artifacts_for(args: &[&str], threads: &str) -> Vec<(String, Vec<u8>)> {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let out_dir = tmp.path().join("out");
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--points", pts.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--threads", threads]);
    let out = run(&full);
    assert!(matches!(code(&out), 0 | 1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let cases: [&[&str]; 4] = [
        &[
            "certify-t1",
            "--weight",
            FOCK,
            "--rho",
            "2",
            "--eps",
            "1",
            "--grid",
            "box:6:15",
            "--jitter",
            "0.1",
            "--seed",
            "7",
        ],
        &["certify-bos", "--weight", FOCK, "--rho", "2", "--eps", "1"],
        &["construct", "--weight", FOCK, "--grid", "box:3:7", "--n-radial", "8", "--n-angular", "12"],
        &["interpolate", "--weight", FOCK, "--grid", "box:2:5"],
    ];
    for args in cases {
        let first = artifacts_for(args, "1");
        assert!(!first.is_empty());
        assert_eq!(first, artifacts_for(args, "1"), "{args:?} differs between runs");
        assert_eq!(first, artifacts_for(args, "4"), "{args:?} differs between thread counts");
    }
}

#[test]
fn threads_fall_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let base = ["certify-t1", "--points", pts.to_str().unwrap(), "--weight", FOCK, "--rho", "2", "--eps", "1"];
    let plain = run(&base);
    let env = bin().args(base).env("HOLO_INTERP_THREADS", "3").output().unwrap();
    assert_eq!(code(&env), 0);
    assert_eq!(plain.stdout, env.stdout);
    let bad = bin().args(base).env("HOLO_INTERP_THREADS", "many").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn sweep_reports_monotone_riesz_bounds() {
    let out =
        run(&["sweep", "--space", r#"{"kind":"flat","n":1}"#, "--weight", FOCK, "--spacings", "4,3,2", "--radii", "4"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let eig: Vec<f64> = rows.iter().map(|r| r["eig_min"].as_f64().unwrap()).collect();
    assert!(eig.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{eig:?}");
}

#[test]
fn construct_reports_energy_and_extension() {
    let tmp = TempDir::new().unwrap();
    let pts = lattice5(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "construct",
        "--points",
        pts.to_str().unwrap(),
        "--weight",
        FOCK,
        "--grid",
        "box:1:3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&read(&out_dir, "energy.json")).unwrap();
    assert_eq!(report["delta0"].as_f64().unwrap(), 2.5);
    assert_eq!(report["frame_check_passed"], true);
    assert!(report["dbar_energy"]["energy"].as_f64().unwrap().is_finite());
    // The grid point at the origin is node 12, where the extension takes the node value 1 + 3i.
    let csv = read(&out_dir, "extension.csv");
    let centre = csv.lines().nth(5).unwrap();
    let fields: Vec<f64> = centre.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
    assert_eq!(&fields[..2], &[0.0, 0.0]);
    assert!((fields[2] - 1.0).abs() < 1e-12 && (fields[3] - 3.0).abs() < 1e-12, "{centre}");
}

#[test]
fn verify_geometry_passes_on_both_models() {
    for space in [DISK, r#"{"kind":"flat","n":2}"#] {
        let out = run(&["verify-geometry", "--space", space, "--samples", "40"]);
        assert_eq!(code(&out), 0, "{space}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
