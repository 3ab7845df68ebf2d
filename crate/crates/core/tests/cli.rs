use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use meanreflect::config::{parse_config, ModelConfig};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanreflect"))
        .args(args)
        .env("MEANREFLECT_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"model": {"case": "i", "beta": 2, "sigma": 1, "eta": 1, "lambda": 5, "x0": 1, "p": 0.5},
    "horizon": 1, "steps": 50, "particles": 300, "replications": 4}"#;

#[test]
fn shipped_figure_two_config() {
    let c = parse_config(&configs().join("fig2.json")).unwrap();
    let ModelConfig::CaseI(p) = c.model else { panic!("{:?}", c.model) };
    assert_eq!((p.beta, p.sigma, p.lambda, p.eta, p.x0, p.p), (2.0, 1.0, 5.0, 1.0, 1.0, 0.5));
    assert_eq!(c.steps.values(), vec![100]);
    assert_eq!(c.horizon, 1.0);
    assert_eq!(c.replications, 1000);
    assert_eq!(c.particles.values(), (0..8).map(|j| 100 + 300 * j).collect::<Vec<_>>());
}

#[test]
fn every_shipped_config_validates() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["validate", "--config", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let pa = std::fs::read(a.join("path.csv")).unwrap();
    assert_eq!(pa, std::fs::read(b.join("path.csv")).unwrap());
    let text = String::from_utf8(pa).unwrap();
    assert!(text.starts_with("t,K_hat,mean_h,mean_X,var_X\n"));
    assert_eq!(text.lines().count(), 52);

    // the manifest carries the seed and reproduces the run
    let c = run(&[
        "simulate",
        "--config",
        a.join("manifest.json").to_str().unwrap(),
        "--out",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    assert_eq!(
        std::fs::read(a.join("path.csv")).unwrap(),
        std::fs::read(dir.path().join("c/path.csv")).unwrap()
    );
    let other = run(&["simulate", "--config", &cfg, "--seed", "8", "--out", dir.path().join("d").to_str().unwrap()]);
    assert!(other.status.success());
    assert_ne!(
        std::fs::read(a.join("path.csv")).unwrap(),
        std::fs::read(dir.path().join("d/path.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", SMALL);
    assert_eq!(run(&["validate", "--config", &good]).status.code(), Some(0));

    let bad = write(dir.path(), "bad.json", &SMALL.replace("\"steps\": 50", "\"steps\": 0"));
    let out = run(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("steps"));

    let broken = write(dir.path(), "broken.json", "{\"model\": ");
    assert_eq!(run(&["validate", "--config", &broken]).status.code(), Some(1));

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));

    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["validate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));

    let out_dir = dir.path().join("conv");
    let out = run(&["convergence", "--config", &good, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "convergence without a seed");

    let out = run(&["oracle", "--case", "ii", "--config", &good, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "case mismatch");

    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_and_density_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    let o = run(&["oracle", "--case", "i", "--config", &cfg, "--out", out.to_str().unwrap(), "--paths", "2"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out.join("oracle.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(cols[0], 1.0);
    assert!((cols[1] - 1.5).abs() < 1e-12);
    assert!((cols[2] - (1.0 - 2.0)).abs() < 1e-12);
    let paths = std::fs::read_to_string(out.join("oracle_paths.csv")).unwrap();
    assert!(paths.starts_with("t,X_exact_0,X_exact_1\n"));

    let den = dir.path().join("d");
    assert!(run(&["density", "--config", &cfg, "--out", den.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(den.join("density.csv")).unwrap();
    assert!(text.starts_with("t,k_hat,k_exact\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn convergence_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &SMALL.replace("\"particles\": 300", "\"particles\": [50, 100, 200]"),
    );
    let out = dir.path().join("conv");
    let o = run(&["convergence", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("n,N,L,E_hat,runtime_sec\n"));
    assert_eq!(csv.lines().count(), 4);
    let reg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("regression.json")).unwrap()).unwrap();
    assert!(reg["slope"].is_f64() && reg["intercept"].is_f64() && reg["r2"].is_f64());

    let single = dir.path().join("single");
    let one = write(dir.path(), "one.json", SMALL);
    let o = run(&["convergence", "--config", &one, "--seed", "3", "--out", single.to_str().unwrap()]);
    assert!(o.status.success());
    let reg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(single.join("regression.json")).unwrap()).unwrap();
    assert!(reg["slope"].is_null());
}
