//! Command-line behavior: exit codes, artifact shapes, config rejection.

use std::path::Path;
use std::process::{Command, Output};

fn fopsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fopsim"))
        .args(args)
        .output()
        .expect("cannot launch fopsim")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

#[test]
fn angle_sweep_writes_91_row_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = fopsim(&["angle-sweep", "--samples", "256", "--out-dir", &out_arg(dir.path())]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("angle_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta_deg,transmittance");
    assert_eq!(lines.len(), 92, "expected header + 91 rows for 0..=90° at 1° steps");
    assert!(!csv.contains('\r'));
    assert!(dir.path().join("angle_sweep.svg").exists());
}

#[test]
fn bad_config_exits_2_with_line_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[render]\nscene_pitch_um = 10.0\nnoise_read_sigma = 0.0\nnoise_shot_gain = 0.0\nwrong_key = 1\n").unwrap();
    let out = fopsim(&["--config", cfg.to_str().unwrap(), "eta", "--rect", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("wrong_key"), "{msg}");
    assert!(msg.contains("line 5"), "{msg}");
}

#[test]
fn missing_line_widths_is_usage_error() {
    let out = fopsim(&["ctf"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fopsim(&["render-usaf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_optimization_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = fopsim(&[
        "optimize-h", "--target-od", "40", "--out-dir", &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn optimize_h_reports_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    // Low-NA plate; modest target so the bisection stays fast.
    std::fs::write(
        &cfg,
        "[fop]\nn_core = 1.51\nn_clad = 1.5082596\nn_incident = 1.0\ncore_diameter_um = 9.0\n\
         pitch_um = 11.0\nthickness_um = 500.0\nk_clad = 0.12\nk_core = 1.2665e-3\n\
         [optimize]\ntarget_od = 4.0\nlambda_nm = 660.0\ntheta_max_deg = 22.0\n\
         h_max_um = 1000.0\nsamples_per_angle = 512\n",
    )
    .unwrap();
    let out = fopsim(&[
        "--config", cfg.to_str().unwrap(), "optimize-h", "--out-dir", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("optimize_h.json")).unwrap())
            .unwrap();
    assert!(report["od_at_thickness"].as_f64().unwrap() >= 4.0);
    assert!(report["od_2um_below"].as_f64().unwrap() < 4.0);
}

#[test]
fn measured_response_substitutes_for_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let measured = dir.path().join("measured.csv");
    let mut text = String::from("theta_deg,transmittance\n");
    for theta in 0..=90 {
        let t = if theta <= 10 { 0.5 } else { 1e-6 };
        text.push_str(&format!("{theta},{t}\n"));
        if theta == 10 {
            // Keep the cutoff sharp on the file's grid so the quadrature
            // sees an edge, not a 1°-wide ramp.
            text.push_str("10.001,1e-6\n");
        }
    }
    std::fs::write(&measured, text).unwrap();
    let out = fopsim(&[
        "eta", "--measured", measured.to_str().unwrap(), "--out-dir", &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eta.json")).unwrap())
            .unwrap();
    // Half of the ideal 10° cone's sin²(θ_C/2).
    let eta = report["eta_c"].as_f64().unwrap();
    assert!((eta - 0.5 * 0.0075961).abs() < 2e-4, "eta_c = {eta}");
}

#[test]
fn frontend_sweep_emits_three_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = fopsim(&[
        "frontend-sweep", "--samples", "256", "--out-dir", &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("frontend_sweep.csv")).unwrap();
    assert!(csv.starts_with("theta_deg,filter_first,filter_last,dual_sided\n"));
    assert_eq!(csv.lines().count(), 92);
    assert!(dir.path().join("frontend_sweep.svg").exists());
}

#[test]
fn render_usaf_writes_graymap_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = fopsim(&[
        "render-usaf", "--line-widths", "220", "--samples", "256",
        "--out-dir", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pgm = std::fs::read(dir.path().join("usaf_w220.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    assert!(dir.path().join("usaf_w220.pgm.csv").exists());
}

#[test]
fn design_sweep_reports_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[sweep]\nnas = [0.1, 0.3]\nfill_factors = [0.4, 0.6]\nemission_nm = 700.0\n\
         excitation_nm = 660.0\nsamples_per_angle = 256\n",
    )
    .unwrap();
    let out = fopsim(&[
        "--config", cfg.to_str().unwrap(), "design-sweep", "--out-dir", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("design_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4, "2 NAs × 2 fill factors");
    assert!(dir.path().join("design_sweep.json").exists());
    assert!(dir.path().join("design_sweep.svg").exists());
}

#[test]
fn calibrate_filter_round_trips_known_index() {
    let dir = tempfile::tempdir().unwrap();
    // Anchors generated from the shift law with n* = 1.826.
    let n = 1.826f64;
    let edge = 677.0;
    let anchor = |theta_deg: f64| {
        let s = theta_deg.to_radians().sin() / n;
        format!("{theta_deg}:{}", edge * (1.0 - s * s).sqrt())
    };
    let out = fopsim(&[
        "calibrate-filter",
        "--anchor", &anchor(15.0),
        "--anchor", &anchor(30.0),
        "--anchor", &anchor(45.0),
        "--edge", "677",
        "--out-dir", &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("calibrate.json")).unwrap(),
    )
    .unwrap();
    let fitted = report["n_eff"].as_f64().unwrap();
    assert!((fitted - n).abs() < 1e-6, "n_eff = {fitted}");
    assert!((1.7..=1.95).contains(&fitted));
}
