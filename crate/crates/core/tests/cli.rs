use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nhlab::cli::run;
use nhlab::linalg;
use nhlab::model::{build_real_space, LatticeParams};
use tempfile::TempDir;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn nhlab(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> nhlab::Result<Vec<PathBuf>> {
    let mut argv = vec!["nhlab".to_string(), cmd.into(), "--config".into(), config.display().to_string()];
    argv.extend(["--out".into(), out.display().to_string()]);
    argv.extend(extra.iter().map(|s| s.to_string()));
    run(argv)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

const SPECTRUM: &str = r#"{
  "schema_version": 1,
  "model": {"v": 0.5, "r": 0.5, "gamma": 1.0, "n_cells": 30, "boundary": "periodic"},
  "spectrum": {"v_grid": {"start": 0.0, "stop": 2.0, "points": 9}}
}"#;

#[test]
fn periodic_spectrum_has_two_n_rows_per_v() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SPECTRUM);
    nhlab("spectrum", &cfg, &tmp.path().join("o"), &[]).unwrap();
    let (header, rows) = read_csv(&tmp.path().join("o/spectrum.csv"));
    assert_eq!(header, ["v [gamma]", "index", "re_E [gamma]", "im_E [gamma]"]);
    assert_eq!(rows.len(), 9 * 60);
    for value in rows.iter().flat_map(|r| [&r[0], &r[2], &r[3]]) {
        let x: f64 = value.parse().unwrap();
        assert_eq!(format!("{x:.16e}"), *value);
    }
}

#[test]
fn open_spectrum_flags_zero_mode_window() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &SPECTRUM.replace("periodic", "open"));
    nhlab("spectrum", &cfg, &tmp.path().join("o"), &["--svg"]).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/spectrum.json")).unwrap()).unwrap();
    let points = json["points"].as_array().unwrap();
    let at = |v: f64| points.iter().find(|p| (p["v"].as_f64().unwrap() - v).abs() < 1e-12).unwrap();
    assert_eq!(at(0.5)["zero_mode_present"], true);
    assert_eq!(at(0.5)["zero_mode_side"], "left");
    assert_eq!(at(2.0)["zero_mode_present"], false);
    assert!(tmp.path().join("o/spectrum_re.svg").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.json",
        r#"{
          "schema_version": 1,
          "model": {"v": 0.5, "r": 0.5, "gamma": 1.0, "n_cells": 12, "boundary": "open"},
          "disorder": {"targets": ["hopping_v", "gain_loss"], "d_grid": {"start": 0.0, "stop": 1.0, "points": 11}, "seed": 4, "batch_seeds": 8}
        }"#,
    );
    let a = nhlab("disorder", &cfg, &tmp.path().join("a"), &[]).unwrap();
    let b = nhlab("disorder", &cfg, &tmp.path().join("b"), &[]).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    nhlab("disorder", &cfg, &tmp.path().join("c"), &["--seed", "5"]).unwrap();
    assert_ne!(fs::read(tmp.path().join("a/disorder_v.csv")).unwrap(), fs::read(tmp.path().join("c/disorder_v.csv")).unwrap());
}

#[test]
fn zero_strength_disorder_is_the_clean_spectrum() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.json",
        r#"{
          "schema_version": 1,
          "model": {"v": 0.5, "r": 0.5, "gamma": 1.0, "n_cells": 30, "boundary": "open"},
          "disorder": {"targets": ["hopping_r"], "d_grid": {"values": [0.0, 0.5]}, "seed": 1}
        }"#,
    );
    nhlab("disorder", &cfg, &tmp.path().join("o"), &[]).unwrap();
    let (header, rows) = read_csv(&tmp.path().join("o/disorder_r.csv"));
    assert_eq!(header[4..], ["zero_mode_present", "zero_mode_side"]);
    let h = build_real_space(&LatticeParams::open(0.5, 0.5, 1.0, 30).unwrap(), None, 0.0).unwrap().into_entries();
    let mut clean = linalg::eigenvalues(&h).unwrap();
    clean.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let zero: Vec<_> = rows.iter().filter(|r| r[0].parse::<f64>().unwrap() == 0.0).collect();
    assert_eq!(zero.len(), 60);
    for (row, e) in zero.iter().zip(&clean) {
        assert_eq!(row[2].parse::<f64>().unwrap(), e.re);
        assert_eq!(row[3].parse::<f64>().unwrap(), e.im);
        assert_eq!(row[5], "left");
    }
}

#[test]
fn svd_scan_single_cell_and_hermitian_rows() {
    let tmp = TempDir::new().unwrap();
    let (gamma, r) = (1.0, 0.5);
    let cfg = write_config(
        tmp.path(),
        "s.json",
        r#"{
          "schema_version": 1,
          "model": {"v": 0.5, "r": 0.5, "gamma": 1.0, "n_cells": 1, "boundary": "open"},
          "svd_scan": {"n_list": [1, 10], "v_grid": {"values": [0.1, 0.5, 0.9]}}
        }"#,
    );
    nhlab("svd-scan", &cfg, &tmp.path().join("o"), &[]).unwrap();
    let (header, rows) = read_csv(&tmp.path().join("o/svd_scan.csv"));
    assert_eq!(header[..4], ["N", "v [gamma]", "sigma_min [gamma]", "sigma_2nd [gamma]"]);
    for row in rows.iter().filter(|r| r[0] == "1") {
        // Singular values of [[iγ/2, v], [v, −iγ/2]] are | |v| ± γ/2 |.
        let v: f64 = row[1].parse().unwrap();
        let (lo, hi) = ((v.abs() - gamma / 2.0).abs(), v.abs() + gamma / 2.0);
        assert!((row[2].parse::<f64>().unwrap() - lo).abs() < 1e-14);
        assert!((row[3].parse::<f64>().unwrap() - hi).abs() < 1e-14);
    }
    let at_half = rows.iter().find(|r| r[0] == "10" && r[1].parse::<f64>().unwrap() == 0.5).unwrap();
    assert!(at_half[2].parse::<f64>().unwrap() < 1e-12);

    let herm = write_config(tmp.path(), "h.json", &fs::read_to_string(&cfg).unwrap().replace("\"gamma\": 1.0", "\"gamma\": 0.0"));
    nhlab("svd-scan", &herm, &tmp.path().join("h"), &[]).unwrap();
    let (header, rows) = read_csv(&tmp.path().join("h/svd_scan.csv"));
    assert_eq!(header[1], "v [abs]");
    for row in rows.iter().filter(|r| r[0] == "10") {
        // Hermitian: singular values are |E|, and the clean bulk bands sit at |v ± r|.
        let v: f64 = row[1].parse().unwrap();
        let h = build_real_space(&LatticeParams::open(v, r, 0.0, 10).unwrap(), None, 0.0).unwrap().into_entries();
        let smallest = linalg::eigenvalues(&h).unwrap().iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min);
        assert!((row[2].parse::<f64>().unwrap() - smallest).abs() < 1e-12);
    }
}

#[test]
fn evolve_presets_detect_the_zero_mode() {
    let tmp = TempDir::new().unwrap();
    for (preset, expected) in [("defective", true), ("trivial", false)] {
        let cfg = write_config(
            tmp.path(),
            &format!("{preset}.json"),
            &format!(r#"{{"schema_version": 1, "evolve": {{"preset": "{preset}", "t_max": 60.0, "dt": 0.01}}}}"#),
        );
        let out = tmp.path().join(preset);
        nhlab("evolve", &cfg, &out, &[]).unwrap();
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("evolve.json")).unwrap()).unwrap();
        assert_eq!(json["zero_peak"], expected);
        let (header, rows) = read_csv(&out.join("evolve_populations.csv"));
        assert_eq!(header, ["t [1/gamma]", "cell", "population"]);
        assert_eq!(rows.len(), 6001 * 5);
    }
}

#[test]
fn winding_and_sweep_commands() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "w.json",
        r#"{
          "schema_version": 1,
          "model": {"v": 0.3, "r": 0.3, "gamma": 1.0, "n_cells": 1, "boundary": "periodic"},
          "winding": {
            "parameter_sets": [{"v": 0.3, "r": 0.18, "gamma": 1.0}, {"v": 0.3, "r": 0.3, "gamma": 1.0}, {"v": 0.3, "r": 1.0, "gamma": 1.0}, {"v": 0.3, "r": 0.6, "gamma": 0.0}],
            "random_batch": {"count": 40, "seed": 3, "v_range": [-1.5, 1.5], "r_range": [0.02, 1.5], "gamma_range": [0.1, 2.0], "min_margin": 0.02}
          },
          "sweep_phase": {"k_values": [0.0, 2.0], "mode": "transport"}
        }"#,
    );
    nhlab("winding", &cfg, &tmp.path().join("w"), &[]).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("w/winding.json")).unwrap()).unwrap();
    let got: Vec<(f64, String)> = json
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["winding"].as_f64().unwrap(), s["closure_period"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(got, [(0.0, "2pi".into()), (0.5, "4pi".into()), (1.0, "2pi".into()), (1.0, "2pi".into())]);
    let batch: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("w/winding_batch.json")).unwrap()).unwrap();
    assert_eq!(batch["violations"], 0);
    let (header, _) = read_csv(&tmp.path().join("w/winding_001.csv"));
    assert_eq!(header, ["k [rad]", "sigma_x", "sigma_z"]);

    nhlab("sweep-phase", &cfg, &tmp.path().join("s"), &[]).unwrap();
    let (_, rows) = read_csv(&tmp.path().join("s/sweep_phase.csv"));
    assert!(rows.iter().all(|r| r[7] == "true"));
}

#[test]
fn config_errors_fail_closed() {
    let tmp = TempDir::new().unwrap();
    let unknown = write_config(tmp.path(), "u.json", &SPECTRUM.replace("\"n_cells\": 30", "\"n_cells\": 30, \"N\": 30"));
    assert!(matches!(nhlab("spectrum", &unknown, &tmp.path().join("o"), &[]), Err(nhlab::Error::Config(_))));
    let empty = write_config(tmp.path(), "e.json", &SPECTRUM.replace("\"points\": 9", "\"points\": 0"));
    assert!(matches!(nhlab("spectrum", &empty, &tmp.path().join("o"), &[]), Err(nhlab::Error::Config(_))));
    let missing = write_config(tmp.path(), "m.json", &SPECTRUM.replace("\"r\": 0.5, ", ""));
    assert!(nhlab("spectrum", &missing, &tmp.path().join("o"), &[]).is_err());
    assert!(nhlab("winding", &write_config(tmp.path(), "s.json", SPECTRUM), &tmp.path().join("o"), &[]).is_err());
}

#[test]
fn binary_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let good = write_config(tmp.path(), "g.json", SPECTRUM);
    let bad = write_config(tmp.path(), "b.json", &SPECTRUM.replace("\"schema_version\": 1", "\"schema_version\": 9"));
    let exe = env!("CARGO_BIN_EXE_nhlab");
    let out = tmp.path().join("o");
    let ok = Command::new(exe).args(["spectrum", "--config"]).arg(&good).arg("--out").arg(&out).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8(ok.stdout).unwrap().contains("spectrum.csv"));
    let err = Command::new(exe).args(["spectrum", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8(err.stderr).unwrap().contains("schema_version"));
}
