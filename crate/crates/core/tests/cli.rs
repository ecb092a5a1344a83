use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vkcone::cli::{read_profile_csv, RunConfig};
use vkcone::minimize::minimize;

fn vkcone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vkcone"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = vkcone(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => vec![],
    };
    v.sort();
    v
}

#[test]
fn minimize_with_defaults_writes_profile_and_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run_ok(&["minimize", "--out", out.to_str().unwrap()]);
    assert_eq!(listing(&out), ["energy.json", "profile.csv"]);

    let energy: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("energy.json")).unwrap()).unwrap();
    for key in [
        "lambda",
        "r_max",
        "E_hat_R",
        "E_plus_R",
        "stretch_part",
        "bend_part",
        "boundary_u1",
        "identity_residual",
        "grad_norm",
        "iterations",
    ] {
        assert!(energy.get(key).is_some(), "energy.json lacks {key}");
    }

    let text = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("r,u_hat,w_hat,u_tilde,w_tilde,density,renorm_density"));

    // the table reproduces the in-memory minimizer
    let cfg = RunConfig::default().minimize_config().unwrap();
    let direct = minimize(&cfg).unwrap().profile;
    let back = read_profile_csv(&out.join("profile.csv")).unwrap();
    assert_eq!(back.grid().nodes(), direct.grid().nodes());
    for (a, b) in back.u_hat().iter().zip(direct.u_hat()).chain(back.w_hat().iter().zip(direct.w_hat())) {
        assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
    }
    assert_eq!(energy["E_hat_R"].as_f64().unwrap(), minimize(&cfg).unwrap().energy.e_hat_r);
}

#[test]
fn outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = write_config(tmp.path(), r#"{"n_cells": 1024}"#);
    for d in [&a, &b] {
        run_ok(&["minimize", "--config", &cfg, "--out", d.to_str().unwrap()]);
    }
    for f in ["profile.csv", "energy.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn sweep_writes_table_and_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    run_ok(&["sweep", "--out", out.to_str().unwrap()]);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("lambda,I_over_lambda2,log_inv_lambda,E_hat,converged"));
    assert_eq!(lines.count(), 5);
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert!(fit["slope"].as_f64().is_some());
}

#[test]
fn malformed_config_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    for json in [r#"{"lambda": 1.0,"#, r#"{"lamda": 1.0}"#, r#"{"grad_tol": -1.0}"#] {
        let cfg = write_config(tmp.path(), json);
        let res = vkcone(&["minimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(!res.status.success(), "{json} was accepted");
        assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
        assert!(listing(&out).is_empty(), "{json} left {:?}", listing(&out));
    }
    let res = vkcone(&["minimize", "--config", "/nonexistent/config.json", "--out", out.to_str().unwrap()]);
    assert!(!res.status.success());
}

#[test]
fn bad_epsilon_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("surface");
    let cfg = write_config(tmp.path(), r#"{"epsilon": 1.5}"#);
    let res = vkcone(&["export-surface", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(listing(&out).is_empty());
}

#[test]
fn print_config_emits_the_defaults() {
    let res = vkcone(&["minimize", "--print-config"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), RunConfig::default());
}

#[test]
fn surface_export_writes_a_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("surface");
    let cfg = write_config(tmp.path(), r#"{"n_cells": 512, "angular_samples": 12}"#);
    run_ok(&["export-surface", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let obj = fs::read_to_string(out.join("surface.obj")).unwrap();
    let verts = obj.lines().filter(|l| l.starts_with("v ")).count();
    let faces = obj.lines().filter(|l| l.starts_with("f ")).count();
    assert_eq!(verts, 1 + 512 * 13);
    assert_eq!(faces, 12 + 2 * 12 * 511);
    assert!(obj.starts_with("# vkcone surface"));
}

#[test]
fn shoot_and_analyze_report_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("tail");
    run_ok(&["shoot", "--out", out.to_str().unwrap()]);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("match.json")).unwrap()).unwrap();
    assert!(rep["mismatch"].as_f64().unwrap() <= 1e-6);
    assert!(fs::read_to_string(out.join("tail.csv")).unwrap().starts_with("s,w,w_prime,w_shot,w_prime_shot\n"));

    run_ok(&["analyze", "--out", out.to_str().unwrap()]);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    assert!(rep["far_field"].as_f64().unwrap() <= 1e-3);
    assert!((rep["origin"]["a"].as_f64().unwrap() - 0.5).abs() <= 0.025);
}

#[test]
fn inequality_report_is_written() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ineq");
    let cfg = write_config(tmp.path(), r#"{"corpus": {"functions": 4, "profiles": 2}}"#);
    run_ok(&["verify-inequalities", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("inequalities.json")).unwrap()).unwrap();
    assert!(rep["sup_bound"]["max_ratio"].as_f64().unwrap() <= 1.0 + 1e-9);
}
