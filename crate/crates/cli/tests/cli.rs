use std::path::Path;
use std::process::{Command, Output};

fn tvdise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvdise")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_samples(path: &Path, shift: f64, n: usize) {
    let body: String = (0..n)
        .map(|i| {
            let x = (i as f64 * 0.618_033_988_7).fract() * 4.0 - 2.0 + shift;
            let y = (i as f64 * 0.414_213_562_3).fract() * 4.0 - 2.0;
            format!("{x},{y}\n")
        })
        .collect();
    std::fs::write(path, body).unwrap();
}

#[test]
fn oracle_quadrature_value() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("pair.json");
    std::fs::write(&spec, r#"{"p": {"kind": "normal", "mean": 1.0, "var": 1.0}, "q": {"kind": "normal", "mean": -1.0, "var": 1.0}}"#).unwrap();
    let v = json(&tvdise(&["oracle", "--spec", spec.to_str().unwrap(), "--method", "quad"]));
    assert!((v["tv"].as_f64().unwrap() - 0.682_689_492_137_086).abs() < 1e-8);
    assert_eq!(v["method"], "quad");
}

#[test]
fn estimate_reports_seed_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_samples(&a, 0.0, 800);
    write_samples(&b, 1.0, 800);
    for m in ["dise", "pe", "kde", "nnre", "ee"] {
        let v = json(&tvdise(&["estimate", "--real", a.to_str().unwrap(), "--synth", b.to_str().unwrap(), "--method", m, "--seed", "3", "--n-mc", "2000"]));
        assert_eq!(v["seed"], 3);
        let tv = v["estimate"]["tv"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&tv), "{m}: {tv}");
    }
}

#[test]
fn saved_model_reproduces_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, model) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("m.json"));
    write_samples(&a, 0.0, 600);
    write_samples(&b, 0.5, 600);
    let (a, b, model) = (a.to_str().unwrap(), b.to_str().unwrap(), model.to_str().unwrap());
    json(&tvdise(&["estimate", "--real", a, "--synth", b, "--save-model", model]));
    let first = json(&tvdise(&["estimate", "--real", a, "--synth", b, "--model", model]));
    let second = json(&tvdise(&["estimate", "--real", a, "--synth", b, "--model", model]));
    assert_eq!(first, second);
}

#[test]
fn config_and_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = tvdise(&["estimate", "--real", missing.to_str().unwrap(), "--synth", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "p = 2\nn_train = 10\nn_test = 10\nbogus = 1\n").unwrap();
    assert_eq!(tvdise(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    std::fs::write(&bad, "p = 0\nn_train = 10\nn_test = 10\n").unwrap();
    assert_eq!(tvdise(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    std::fs::write(&cfg, "p = 2\nn_train = 300\nn_test = 600\nn_replications = 2\nmethods = [\"dise\", \"pe\"]\nn_mc = 1000\n").unwrap();
    let out = dir.path().join("out");
    let v = json(&tvdise(&["--threads", "1", "simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(v["summary"].as_array().unwrap().len(), 2);
    for f in ["records.csv", "summary.csv", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}
