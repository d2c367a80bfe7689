use std::fs;
use std::path::Path;
use std::process::Command as Proc;

use irlab_experiments::config::{Emit, ExperimentConfig, Sweep};
use irlab_experiments::output::{read_csv, sha256_file, write_csv};
use irlab_experiments::runs::{execute, Command};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.dynamics.max_iters = Some(1500);
    cfg.dynamics.record_every = 5;
    cfg
}

fn effective_rank(values: &[f64]) -> f64 {
    let nuc: f64 = values.iter().map(|v| v.abs()).sum();
    let spec = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    nuc / spec
}

#[test]
fn observe_csv_round_trips_effective_rank() {
    let dir = tempfile::tempdir().unwrap();
    execute(Command::Observe, &small(), dir.path()).unwrap();
    let (header, rows) = read_csv(&dir.path().join("observe_eta_0.005.csv")).unwrap();
    assert_eq!(&header[..4], ["sweep_id", "k", "eff_rank", "loss"]);
    assert_eq!(header.len(), 4 + 20);
    assert_eq!(rows.len(), 1500 / 5 + 1);
    for row in &rows {
        assert_eq!(row[0], "eta=0.005");
        let d: Vec<f64> = row[4..].iter().map(|s| s.parse::<f64>().unwrap().powi(2)).collect();
        let stored: f64 = row[2].parse().unwrap();
        assert!((effective_rank(&d) - stored).abs() <= 1e-12, "k={}", row[1]);
    }
}

#[test]
fn empty_dataset_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_csv(&path, &["level".into(), "k".into(), "frob_err".into()], &[]).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "level,k,frob_err\r\n");
    let (h, rows) = read_csv(&path).unwrap();
    assert_eq!(h.len(), 3);
    assert!(rows.is_empty());
}

fn checksums(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), sha256_file(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn repeated_runs_are_byte_identical() {
    let mut cfg = small();
    cfg.noise.levels = vec![0.0, 0.1];
    for cmd in [Command::Observe, Command::Noise, Command::Certify] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        execute(cmd, &cfg, a.path()).unwrap();
        execute(cmd, &cfg, b.path()).unwrap();
        let (ca, cb) = (checksums(a.path()), checksums(b.path()));
        assert!(!ca.is_empty());
        assert_eq!(ca, cb, "{cmd:?}");
    }
}

#[test]
fn permuting_sweep_points_keeps_per_point_files() {
    let mut cfg = small();
    cfg.emit = vec![Emit::Csv, Emit::Report];
    cfg.sweep = Sweep::Eta(vec![0.005, 0.02]);
    let a = tempfile::tempdir().unwrap();
    execute(Command::Observe, &cfg, a.path()).unwrap();
    cfg.sweep = Sweep::Eta(vec![0.02, 0.005]);
    let b = tempfile::tempdir().unwrap();
    execute(Command::Observe, &cfg, b.path()).unwrap();
    assert_eq!(checksums(a.path()), checksums(b.path()));
    assert_eq!(checksums(a.path()).len(), 4);
}

#[test]
fn zero_noise_reproduces_noiseless_effective_rank() {
    let mut cfg = small();
    cfg.noise.levels = vec![0.0];
    let dir = tempfile::tempdir().unwrap();
    execute(Command::Observe, &cfg, dir.path()).unwrap();
    execute(Command::Noise, &cfg, dir.path()).unwrap();
    let (_, obs) = read_csv(&dir.path().join("observe_eta_0.005.csv")).unwrap();
    let (_, noise) = read_csv(&dir.path().join("noise_eff_rank.csv")).unwrap();
    assert_eq!(obs.len(), noise.len());
    for (o, n) in obs.iter().zip(&noise) {
        assert_eq!(o[1], n[1]);
        assert_eq!(o[2], n[2], "k={}", o[1]);
    }
}

#[test]
fn noise_with_a_sweep_is_rejected() {
    let mut cfg = small();
    cfg.sweep = Sweep::Eta(vec![0.005]);
    let dir = tempfile::tempdir().unwrap();
    let err = execute(Command::Noise, &cfg, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn manifest_lists_every_output_with_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let out = execute(Command::Certify, &small(), dir.path()).unwrap();
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "certify");
    let outputs = m["outputs"].as_object().unwrap();
    assert_eq!(outputs.len(), out.files.len() - 1);
    for (name, sum) in outputs {
        assert_eq!(sum.as_str().unwrap(), sha256_file(&dir.path().join(name)).unwrap());
    }
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

// ---- CLI

fn irlab() -> Proc {
    let mut p = Proc::new(env!("CARGO_BIN_EXE_irlab"));
    p.env_remove("IRLAB_OUT");
    p
}

#[test]
fn cli_certify_prints_walkthrough_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = irlab().args(["certify", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("K_eps = 4.213962"));
    assert!(text.contains("required 4.264287"));
    assert!(dir.path().join("certify.json").exists());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    fs::write(&cfg_path, r#"{"window": {"ranks": [20]}}"#).unwrap();
    let out = irlab().args(["certify", "--config"]).arg(&cfg_path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank 20"));

    fs::write(&cfg_path, "{ not json").unwrap();
    let out = irlab().args(["certify", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // The rank-1 window of the default spectrum is empty.
    let out = irlab().args(["certify", "--strict", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = irlab().args(["certify", "--config"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(5));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = irlab().args(["certify", "--out"]).arg(blocker.join("sub")).output().unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn cli_divergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"dynamics": {"eta": 5.0, "alpha": 1.0, "max_iters": 200}, "window": {"ranks": [1]}}"#)
        .unwrap();
    let out = irlab().args(["observe", "--config"]).arg(&cfg_path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cli_output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let (env_dir, flag_dir, cfg_dir) = (dir.path().join("env"), dir.path().join("flag"), dir.path().join("cfg"));
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, serde_json::json!({ "output_dir": cfg_dir, "emit": ["report"] }).to_string()).unwrap();

    let run = |extra: &[&Path], env: bool| {
        let mut p = irlab();
        p.args(["certify", "--config"]).arg(&cfg_path);
        if env {
            p.env("IRLAB_OUT", &env_dir);
        }
        if let Some(f) = extra.first() {
            p.arg("--out").arg(f);
        }
        assert_eq!(p.output().unwrap().status.code(), Some(0));
    };
    run(&[], false);
    assert!(cfg_dir.join("certify.json").exists());
    run(&[], true);
    assert!(env_dir.join("certify.json").exists());
    run(&[&flag_dir], true);
    assert!(flag_dir.join("certify.json").exists());
}

#[test]
fn cli_emit_and_axis_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"dynamics": {"max_iters": 300}}"#).unwrap();
    let out = irlab()
        .args(["observe", "--emit", "svg", "--linear-x", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into()).collect();
    assert!(names.contains(&"observe_eta_0.005.svg".to_string()));
    assert!(!names.iter().any(|n| n.ends_with(".csv")));
    let svg = fs::read_to_string(dir.path().join("observe_eta_0.005.svg")).unwrap();
    assert!(!svg.contains(">1e2<"), "linear axis expected");
    let bad = irlab().args(["observe", "--emit", "png"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
