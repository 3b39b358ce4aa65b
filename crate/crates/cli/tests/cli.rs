use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn levymax(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_levymax")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn rates_slope_matches_class() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = levymax(&["rates", "--beta", "0.5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["passed"], true);
    let slope = r["results"]["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 0.1, "slope {slope}");
    assert!(out.join("tables/rates.csv").is_file());
}

#[test]
fn gcp_laplacian_passes_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = levymax(&["gcp", "--seed", "7", "--operator", "discrete_laplacian", "-o", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = std::fs::read(a.join("report.json")).unwrap();
    let rb = std::fs::read(b.join("report.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(report(&a)["passed"], true);
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{\"seed\": 1,").unwrap();
    let out = tmp.path().join("o");
    let o = levymax(&["rates", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_config_field_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("typo.json");
    std::fs::write(&cfg, r#"{"sed": 1}"#).unwrap();
    let out = tmp.path().join("o");
    let o = levymax(&["rates", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn randomized_experiment_requires_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = levymax(&["minmax", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "rates", "class": {"beta": 1.5}, "grid": {"levels": [2, 3, 4, 5]}}"#)
        .unwrap();
    let out = tmp.path().join("o");
    let o = levymax(&["rates", "--config", cfg.to_str().unwrap(), "--beta", "0.5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["results"]["beta"], 0.5);
}

#[test]
fn study_runs_single_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = levymax(&["study", "--criterion", "1", "--seed", "3", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["passed"], true);
}

#[test]
fn mismatched_experiment_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "gcp", "seed": 1}"#).unwrap();
    let out = tmp.path().join("o");
    let o = levymax(&["rates", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
