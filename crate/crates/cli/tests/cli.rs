use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hslab(args: &[&str], out: Option<&Path>, env_out: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hslab"));
    if let Some(o) = out {
        c.arg("--out").arg(o);
    }
    c.args(args).env_remove("HSLAB_OUT");
    if let Some(e) = env_out {
        c.env("HSLAB_OUT", e);
    }
    c.output().expect("spawn hslab")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn constants_json_holds_the_n4_levels() {
    let dir = tempfile::tempdir().unwrap();
    let o = hslab(&["constants", "--N", "4", "--gamma", "0.75"], Some(dir.path()), None);
    assert!(o.status.success());
    let v = json_file(&dir.path().join("constants.json"));
    let c = &v["result"]["constants"];
    assert!((c["Lambda"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((c["levels"]["two_peak"].as_f64().unwrap() - 0.585786).abs() < 1e-6);
    assert!((c["levels"]["hidden"].as_f64().unwrap() - 0.646447).abs() < 1e-6);
    assert_eq!(v["config"]["command"], "constants");
    // stdout carries the same report
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout, v);
    assert!(dir.path().join("constants.csv").exists());
}

#[test]
fn spectrum_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = hslab(&["spectrum", "--N", "4", "--gamma-grid", "3"], Some(dir.path()), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..4], &["gamma", "gap_numeric", "gap_formula", "abs_err"]);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').take(4).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r[3] < 1e-3, "row {r:?}");
        assert!((r[1] - r[2]).abs() < 1e-3);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| hslab(args, Some(dir.path()), None).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["no-such-command"]), Some(1));
    assert_eq!(code(&["constants", "--N", "four"]), Some(1));
    assert_eq!(code(&["constants", "--N", "4", "--gamma", "1.5"]), Some(2));
    assert_eq!(code(&["constants", "--N", "2"]), Some(2));
    assert_eq!(code(&["gamma0", "--N", "4"]), Some(2));
    assert_eq!(code(&["gamma0", "--N", "3"]), Some(0));
    assert_eq!(code(&["quotient", "--field", "/nonexistent/field.csv"]), Some(4));
    // a tolerance that cannot be met is a numeric failure
    assert_eq!(code(&["hidden-level", "--z", "5", "--tol", "1e-6"]), Some(3));
}

#[test]
fn out_env_sets_directory_and_flag_wins() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = hslab(&["gamma0", "--N", "3"], None, Some(env_dir.path()));
    assert!(o.status.success());
    assert!(env_dir.path().join("gamma0.json").exists());

    let o = hslab(&["gamma0", "--N", "3"], Some(flag_dir.path()), Some(env_dir.path()));
    assert!(o.status.success());
    assert!(flag_dir.path().join("gamma0.json").exists());
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--format", "json,csv,svg", "two-peak", "--s-ladder", "16,24"];
    assert!(hslab(&args, Some(a.path()), None).status.success());
    assert!(hslab(&args, Some(b.path()), None).status.success());
    for f in ["two-peak.csv", "two-peak.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let strip = |p: &Path| {
        let mut v = json_file(p);
        v["config"]["out"] = Value::Null;
        v
    };
    assert_eq!(strip(&a.path().join("two-peak.json")), strip(&b.path().join("two-peak.json")));
}

#[test]
fn radial_min_field_round_trips_through_quotient() {
    let dir = tempfile::tempdir().unwrap();
    let o = hslab(&["radial-min", "--N", "4", "--gamma", "0.75"], Some(dir.path()), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rm = json_file(&dir.path().join("radial-min.json"));
    let c = rm["result"]["c_rad_estimate"].as_f64().unwrap();
    assert!(c < 0.5 && c > 0.39, "{c}");
    assert!(rm["result"]["thresholds"]["gamma0"].as_f64().is_some());

    let field = dir.path().join("radial-min-field.csv");
    let o = hslab(&["quotient", "--field", field.to_str().unwrap()], Some(dir.path()), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let q = json_file(&dir.path().join("quotient.json"));
    let quotient = q["result"]["quotient"].as_f64().unwrap();
    assert!((quotient - c).abs() < 1e-9 * c.max(1.0), "{quotient} vs {c}");
}

#[test]
fn verify_all_reports_each_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = hslab(&["verify-all", "--criteria", "1,9"], Some(dir.path()), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("AC1 PASS") && err.contains("AC9 PASS"), "{err}");
    let v = json_file(&dir.path().join("verify-all.json"));
    assert_eq!(v["result"]["failed"].as_array().unwrap().len(), 0);
}
