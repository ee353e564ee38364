use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contact-geom"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_arg(dir: &tempfile::TempDir) -> &str {
    dir.path().to_str().unwrap()
}

#[test]
fn analyze_clifford_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze", "--surface", "clifford", "--grid", "64x64", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["partials"], "analytic");
    assert!(report["beta"]["max_abs"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["masked"], 0);
    let csv = std::fs::read_to_string(dir.path().join("fields.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "u,v,x1,y1,x2,y2,beta,K,H,res_curvature,res_laplacian,masked");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 12);
    assert_eq!(first[0], "0.000000000000e+00");
    assert_eq!(first[2], "7.071067811865e-01");
    assert_eq!(csv.lines().count(), 1 + 64 * 64);
    assert!(std::fs::read_to_string(dir.path().join("samples.txt")).unwrap().starts_with("S3SAMPLES v1 64 64 periodic periodic"));
}

#[test]
fn analyze_sphere_matches_closed_form_angle() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze", "--surface", "geodesic_sphere", "--grid", "64x64", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("report.json"));
    assert!(report["beta_truth_max_error"].as_f64().unwrap() < 1e-8);
    assert!((report["k_intrinsic"]["max"].as_f64().unwrap() - 1.0).abs() < 2e-5);
    assert!(report["mean_curvature"]["max_abs"].as_f64().unwrap() <= 5e-6);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&run(&["--threads", "3", "analyze", "--surface", "rtorus", "--param", "r=0.6", "--grid", "32x32", "--out", dir_arg(d)])), 0);
    }
    for f in ["report.json", "fields.csv", "samples.txt"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("CONTACT_GEOM_THREADS", "2")
        .args(["analyze", "--surface", "clifford", "--grid", "16x16", "--out", dir_arg(&dir)])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn fields_csv_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert_eq!(code(&run(&["analyze", "--surface", "geodesic_sphere", "--grid", "32x32", "--out", first.to_str().unwrap()])), 0);
    let csv = first.join("fields.csv");
    let out = run(&["analyze", "--surface", csv.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let beta = |p: &Path| -> Vec<f64> {
        std::fs::read_to_string(p.join("fields.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
            .collect()
    };
    let (a, b) = (beta(&first), beta(&second));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn argument_errors_exit_2() {
    let out = run(&["analyze", "--surface", "nosuch"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown surface"));
    assert_eq!(code(&run(&["analyze", "--surface", "clifford", "--grid", "64by64"])), 2);
    assert_eq!(code(&run(&["analyze", "--surface", "clifford", "--param", "r=1"])), 2);
    assert_eq!(code(&run(&["analyze", "--surface", "rtorus", "--param", "r=0.01"])), 2);
    assert_eq!(code(&run(&["catalog", "frobnicate"])), 2);
    assert_eq!(code(&run(&["verify", "--surface", "clifford", "--identity", "codazzi"])), 2);
    assert_eq!(code(&run(&[])), 2);
}

#[test]
fn bad_input_files_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let off = dir.path().join("off.txt");
    let mut text = String::from("S3SAMPLES v1 8 8 periodic periodic 0 6.283185307179586 0 6.283185307179586\n");
    let h = std::f64::consts::TAU / 8.0;
    for i in 0..8 {
        for j in 0..8 {
            let scale = if (i, j) == (3, 4) { 0.9 } else { 1.0 };
            let (u, v) = (i as f64 * h, j as f64 * h);
            let s = std::f64::consts::FRAC_1_SQRT_2 * scale;
            text.push_str(&format!("{u} {v} {} {} {} {}\n", s * u.cos(), s * u.sin(), s * v.cos(), s * v.sin()));
        }
    }
    std::fs::write(&off, &text).unwrap();
    let out = run(&["analyze", "--surface", off.to_str().unwrap(), "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("(3, 4)"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, text.replacen("\n0 0 ", "\n0 0 1 ", 1)).unwrap();
    let out = run(&["analyze", "--surface", bad.to_str().unwrap(), "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn verify_reports_orders() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--surface", "geodesic_sphere", "--identity", "curvature", "--refine", "32,64,128", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&dir.path().join("identity_report.json"));
    assert!(report["observed_order"].as_f64().unwrap() >= 1.7);
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);
    assert_eq!(report["passed"], true);

    let out = run(&["verify", "--surface", "clifford", "--identity", "laplacian", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("identity_report.json"));
    for level in report["levels"].as_array().unwrap() {
        assert!(level["linf"].as_f64().unwrap() < 1e-10);
    }

    assert_eq!(code(&run(&["verify", "--surface", "clifford", "--identity", "gauss", "--refine", "32"])), 2);
}

#[test]
fn verify_exit_4_when_the_bound_is_missed() {
    // the Laplacian identity is derived for minimal surfaces only
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--surface", "rtorus", "--param", "r=1.0", "--identity", "gauss", "--refine", "16,24,32", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 0);
    let out = run(&["verify", "--surface", "geodesic_sphere", "--param", "cap=0.02", "--identity", "curvature", "--refine", "16,20,24", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("identity_report.json").exists());
}

#[test]
fn flow_r_only_recovers_clifford() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["flow", "--surface", "rtorus", "--param", "r=0.885", "--mode", "r-only", "--grid", "32x32", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&dir.path().join("flow_report.json"));
    let r = report["r_final"].as_f64().unwrap();
    assert!((r - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
    let trace = std::fs::read_to_string(dir.path().join("flow_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,energy,max_h,beta_deviation,step\n"));
}

#[test]
fn flow_without_steps_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["flow", "--surface", "clifford", "--param", "eps=0.05", "--param", "m=2", "--steps", "0", "--out", dir_arg(&dir)]);
    assert_eq!(code(&out), 5);
    let report = json(&dir.path().join("flow_report.json"));
    assert_eq!(report["converged"], false);
    assert_eq!(report["probe"]["verdict"], "inconclusive");
}

#[test]
fn flow_r_only_rejects_other_surfaces() {
    assert_eq!(code(&run(&["flow", "--surface", "geodesic_sphere", "--mode", "r-only"])), 2);
}

#[test]
fn catalog_listing() {
    let out = run(&["catalog", "list"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["clifford", "geodesic_sphere", "rtorus"] {
        assert!(text.contains(name));
    }
    let out = run(&["catalog", "list", "--json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["clifford", "geodesic_sphere", "rtorus"]);
    assert!(v[2]["params"][0]["name"] == "r");
}
