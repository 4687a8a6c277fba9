use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chanest::config::ExperimentConfig;
use chanest::experiments::median;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chanest-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn chanest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chanest")).args(args).arg("--quiet").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = chanest(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn parse(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn bundled_configs_round_trip() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let text = fs::read_to_string(configs().join("smoke.toml")).unwrap();
    assert!(ExperimentConfig::from_toml(&text.replace("trials = 5", "trials = 0")).is_err());
    assert!(ExperimentConfig::from_toml(&text.replace("snr_db = [0.0, 10.0, 20.0]", "snr_db = []")).is_err());
    assert!(ExperimentConfig::from_toml(&text.replace("base_seed = 7", "base_seed = 7\nunknown = 1")).is_err());
}

#[test]
fn smoke_sweep_rows_and_sanity() {
    let dir = scratch("smoke");
    let smoke = configs().join("smoke.toml");
    let (cfg, data) = (smoke.to_str().unwrap(), dir.join("data"));
    let data = data.to_str().unwrap();
    let manifest = ok(&["generate", "--config", cfg, "--data-dir", data]);
    let (h, rows) = parse(&manifest);
    let counts: Vec<&str> = rows.iter().map(|r| r[col(&h, "count")].as_str()).collect();
    assert_eq!(counts, ["200", "10", "20"]);

    let csv = ok(&["estimate", "--config", cfg, "--data-dir", data]);
    let (h, rows) = parse(&csv);
    assert_eq!(rows.len(), 3 * 5 * 5);
    let (est, snr, value) = (col(&h, "estimator"), col(&h, "snr_db"), col(&h, "value"));
    let values = |name: &str, s: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r[est] == name && r[snr] == s)
            .map(|r| r[value].parse().unwrap())
            .collect()
    };
    for s in ["0", "10", "20"] {
        assert!(values("ridge", s).iter().all(|v: &f64| v.is_finite()));
        assert!(median(&values("langevin", s)) < median(&values("zero", s)), "{s} dB");
    }
    assert!(rows.iter().all(|r| r[col(&h, "wall_ms")] == "0"));

    let timed = ok(&["estimate", "--config", cfg, "--data-dir", data, "--timing"]);
    assert_eq!(parse(&timed).1.len(), rows.len());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn missing_dataset_is_an_error() {
    let dir = scratch("missing");
    let smoke = configs().join("smoke.toml");
    let out = chanest(&["estimate", "--config", smoke.to_str().unwrap(), "--data-dir", dir.join("none").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest.csv"));
}

#[test]
fn seed_override_changes_output() {
    let dir = scratch("seed");
    let smoke = configs().join("smoke.toml");
    let cfg = smoke.to_str().unwrap();
    let d = |s: &str| dir.join(s).to_str().unwrap().to_string();
    let a = ok(&["generate", "--config", cfg, "--data-dir", &d("a")]);
    let b = ok(&["generate", "--config", cfg, "--data-dir", &d("b"), "--seed", "8"]);
    assert_ne!(a, b);
    assert_ne!(fs::read(dir.join("a/train.csim")).unwrap(), fs::read(dir.join("b/train.csim")).unwrap());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn theory_report_properties() {
    let dir = scratch("theory");
    let mut cfg = ExperimentConfig::load(&configs().join("default.toml")).unwrap();
    let path = dir.join("t.toml");
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    let (h, rows) = parse(&ok(&["theory", "--config", path.to_str().unwrap()]));
    let num = |r: &Vec<String>, c: &str| -> f64 { r[col(&h, c)].parse().unwrap() };
    for r in &rows {
        if num(r, "closed_form") > 0.0 {
            assert!(num(r, "quad_rel_dev") < 1e-3, "{r:?}");
        }
        let product = num(r, "delta_mnr_squared") * num(r, "sigma_pilot").powi(2);
        assert!((product - num(r, "w2_squared")).abs() <= 1e-8 * num(r, "w2_squared"));
    }

    let theory = cfg.theory.as_mut().unwrap();
    theory.profiles[1] = theory.profiles[0].clone();
    theory.profiles.truncate(2);
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    let (h, rows) = parse(&ok(&["theory", "--config", path.to_str().unwrap()]));
    for r in &rows {
        for c in ["closed_form", "quadrature", "quad_abs_dev", "w2_squared", "delta_mnr_squared"] {
            assert_eq!(r[col(&h, c)], "0", "{c}");
        }
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn e2e_rows_are_sane() {
    let dir = scratch("e2e");
    let smoke = configs().join("smoke.toml");
    let (cfg, data) = (smoke.to_str().unwrap(), dir.join("data"));
    let data = data.to_str().unwrap();
    ok(&["generate", "--config", cfg, "--data-dir", data]);
    let (h, rows) = parse(&ok(&["e2e", "--config", cfg, "--data-dir", data]));
    // perfect CSI is added in front of the five configured estimators
    assert_eq!(rows.len(), 3 * 5 * 6 * 2 * 2);
    let (est, ber, bits, status) = (col(&h, "estimator"), col(&h, "ber"), col(&h, "num_bits"), col(&h, "status"));
    assert!(rows.iter().any(|r| r[est] == "perfect"));
    for r in rows.iter().filter(|r| r[status] == "ok") {
        let b: f64 = r[ber].parse().unwrap();
        let n: f64 = r[bits].parse().unwrap();
        assert!((0.0..=0.5 + 3.0 * (0.25 / n).sqrt()).contains(&b), "{r:?}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn dsm_report_rows() {
    let dir = scratch("dsm");
    let smoke = configs().join("smoke.toml");
    let (cfg, data) = (smoke.to_str().unwrap(), dir.join("data"));
    let data = data.to_str().unwrap();
    ok(&["generate", "--config", cfg, "--data-dir", data]);
    let text = ok(&["dsm", "--config", cfg, "--data-dir", data]);
    assert_eq!(text, ok(&["dsm", "--config", cfg, "--data-dir", data]));
    let (h, rows) = parse(&text);
    assert_eq!(h, ["sigma", "loss", "n", "seed"]);
    assert_eq!(rows.len(), 8);
    let sigmas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(sigmas.windows(2).all(|w| w[1] < w[0]));
    for r in &rows {
        let loss: f64 = r[1].parse().unwrap();
        assert!(loss.is_finite() && loss >= 0.0, "{r:?}");
        assert_eq!(r[2], "200");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn selftest_passes_and_detects_the_sign_mutation() {
    let clean = chanest(&["selftest"]);
    assert!(clean.status.success(), "{}", String::from_utf8_lossy(&clean.stdout));
    let mutated = chanest(&["selftest", "--mutate-likelihood-sign"]);
    assert!(!mutated.status.success());
    let report = String::from_utf8(mutated.stdout).unwrap();
    let line = report.lines().find(|l| l.starts_with("conjugate-oracle")).unwrap();
    assert!(line.contains(",fail,"), "{line}");
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = scratch("threads");
    let smoke = configs().join("smoke.toml");
    let (cfg, data) = (smoke.to_str().unwrap(), dir.join("data"));
    let data = data.to_str().unwrap();
    ok(&["generate", "--config", cfg, "--data-dir", data]);
    let one = ok(&["estimate", "--config", cfg, "--data-dir", data, "--threads", "1"]);
    let three = ok(&["estimate", "--config", cfg, "--data-dir", data, "--threads", "3"]);
    assert_eq!(one, three);
    let _ = fs::remove_dir_all(&dir);
}
