use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn contraction(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contraction"))
        .args(args)
        .current_dir(dir)
        .env("CONTRACTION_OUT_DIR", dir.join("out"))
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&out.stderr)))
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const DONSKER: &str = r#"{"seed": 11, "n": 64, "ensemble_size": 1000, "model": {"type": "donsker"}}"#;

#[test]
fn simulate_writes_ensemble_and_manifest() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", DONSKER);
    let out = contraction(tmp.path(), &["simulate", "c.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("out/ensemble.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1001);
    for line in &lines[1..] {
        let path: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(path["kind"], "piecewise_linear");
        assert!(path["breakpoints"].as_array().unwrap().len() <= 65);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/ensemble.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["outputs"][0]["path"], "ensemble.jsonl");
    assert_eq!(manifest["outputs"][0]["bytes"], text.len());
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_is_deterministic_across_threads() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", DONSKER);
    let mut files = Vec::new();
    for threads in ["1", "3", "1"] {
        let out = contraction(tmp.path(), &["--threads", threads, "simulate", "c.json"]);
        assert_eq!(out.status.code(), Some(0));
        files.push(fs::read(tmp.path().join("out/ensemble.jsonl")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn config_digest_ignores_field_order() {
    let tmp = TempDir::new().unwrap();
    let digest = |name: &str, text: &str| {
        write(tmp.path(), name, text);
        assert_eq!(contraction(tmp.path(), &["simulate", name]).status.code(), Some(0));
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join("out/ensemble.manifest.json")).unwrap()).unwrap();
        m["config_digest"].as_str().unwrap().to_string()
    };
    let a = digest("a.json", r#"{"seed": 1, "n": 8, "ensemble_size": 5, "model": {"type": "donsker"}}"#);
    let b = digest("b.json", r#"{"model": {"type": "donsker"}, "ensemble_size": 5, "n": 8, "seed": 1}"#);
    let c = digest("c.json", r#"{"model": {"type": "donsker"}, "ensemble_size": 5, "n": 9, "seed": 1}"#);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn invalid_n0_exits_with_validation_error() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.json",
        "{\n  \"seed\": 1,\n  \"n\": 5,\n  \"ensemble_size\": 10,\n  \"model\": {\"type\": \"custom\", \"k\": 1,\n    \"n0\": 0,\n    \"operators\": [{\"kind\": \"scale\", \"params\": [1.0]}],\n    \"index_rule\": {\"type\": \"minus\", \"offset\": 1}, \"base\": []}\n}\n",
    );
    let out = contraction(tmp.path(), &["simulate", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "validation");
    assert_eq!(err["line"], 6);
}

#[test]
fn malformed_config_reports_position() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", "{\"seed\": 1,\n \"n\": 5\n \"ensemble_size\": 10}");
    let out = contraction(tmp.path(), &["simulate", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["line"], 3);
    assert!(err["column"].as_u64().is_some());
    let out = contraction(tmp.path(), &["simulate", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_recursion_exits_with_runtime_error() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"seed": 1, "n": 1000, "ensemble_size": 2,
            "model": {"type": "custom", "k": 1, "n0": 1,
                      "operators": [{"kind": "scale", "params": [1.0]}],
                      "index_rule": {"type": "minus", "offset": 1},
                      "base": [{"type": "path", "path": {"kind": "piecewise_linear", "breakpoints": [0, 1], "values": [0, 1]}}]}}"#,
    );
    let out = contraction(tmp.path(), &["simulate", "c.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "runtime");
}

#[test]
fn custom_model_with_base_file() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "base.json", r#"{"seed": 2, "n": 1, "ensemble_size": 20, "output": "base.jsonl", "model": {"type": "donsker"}}"#);
    assert_eq!(contraction(tmp.path(), &["simulate", "base.json"]).status.code(), Some(0));
    fs::copy(tmp.path().join("out/base.jsonl"), tmp.path().join("base.jsonl")).unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"seed": 3, "n": 12, "ensemble_size": 50,
            "model": {"type": "custom", "k": 2, "n0": 2,
                      "operators": [{"kind": "front_split", "params": [2.0]}, {"kind": "back_split", "params": [2.0]}],
                      "index_rule": {"type": "uniform_split"},
                      "base": [{"type": "path", "path": {"kind": "piecewise_linear", "breakpoints": [0, 1], "values": [0, 0]}},
                               {"type": "file", "file": "base.jsonl"}]}}"#,
    );
    let out = contraction(tmp.path(), &["simulate", "c.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn distance_contracts() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", r#"{"seed": 5, "n": 16, "ensemble_size": 40, "output": "a.jsonl", "model": {"type": "donsker"}}"#);
    assert_eq!(contraction(tmp.path(), &["simulate", "c.json"]).status.code(), Some(0));
    write(tmp.path(), "d.json", r#"{"seed": 6, "n": 16, "ensemble_size": 30, "output": "b.jsonl", "model": {"type": "donsker"}}"#);
    assert_eq!(contraction(tmp.path(), &["simulate", "d.json"]).status.code(), Some(0));

    let out = contraction(tmp.path(), &["distance", "out/a.jsonl", "out/a.jsonl", "--grid", "0.25,0.5,1", "--csv", "rows.csv", "--n", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["value"], 0.0);
    assert_eq!(report["estimator"], "assignment");
    let csv = fs::read_to_string(tmp.path().join("rows.csv")).unwrap();
    assert_eq!(csv, "n,estimator,value,stderr,seed\n16,assignment,0e0,,0\n");

    let out = contraction(tmp.path(), &["distance", "out/a.jsonl", "out/a.jsonl", "--estimator", "exact_1d"]);
    assert_eq!(out.status.code(), Some(2));

    let out = contraction(tmp.path(), &["distance", "out/a.jsonl", "out/b.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["hint"].as_str().unwrap().contains("--resample"));

    let out = contraction(tmp.path(), &["distance", "out/a.jsonl", "out/b.jsonl", "--resample", "30", "--bootstrap", "10", "--p", "3", "--estimator", "zeta"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["value"].as_f64().unwrap() > 0.0);
}

const SMALL: &str = r#"{"seed": 9, "n_values": [4, 16], "ensemble_size": 200, "null_pairs": 3, "iterations": 3, "mc_samples": 20, "block_size": 100}"#;

#[test]
fn experiments_write_bundles_deterministically() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "e.json", SMALL);
    let out = contraction(tmp.path(), &["--threads", "1", "experiment", "bm-char", "--config", "e.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/bm-char.csv")).unwrap();
    assert!(csv.starts_with("n,estimator,value,stderr,seed\n"));
    assert_eq!(csv.lines().count(), 1 + 4);
    let first = fs::read(tmp.path().join("out/bm-char.json")).unwrap();
    let out = contraction(tmp.path(), &["--threads", "3", "experiment", "bm-char", "--config", "e.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(first, fs::read(tmp.path().join("out/bm-char.json")).unwrap());

    let out = contraction(tmp.path(), &["experiment", "rates", "--config", "e.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("out/rates.manifest.json").exists());
}

#[test]
fn experiment_validation() {
    let tmp = TempDir::new().unwrap();
    let out = contraction(tmp.path(), &["experiment", "nope", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["hint"].as_str().unwrap().contains("bm-char"));
    let out = contraction(tmp.path(), &["experiment", "donsker"]);
    assert_eq!(out.status.code(), Some(2));
    write(tmp.path(), "e.json", r#"{"seed": 1, "colour": "blue"}"#);
    let out = contraction(tmp.path(), &["experiment", "donsker", "--config", "e.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn report_single_criterion() {
    let tmp = TempDir::new().unwrap();
    let out = contraction(tmp.path(), &["report", "--criterion", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("AC4  PASS"), "{stdout}");
    assert!(tmp.path().join("out/acceptance.json").exists());
    assert_eq!(contraction(tmp.path(), &["report"]).status.code(), Some(2));
    assert_eq!(contraction(tmp.path(), &["report", "--criterion", "12"]).status.code(), Some(2));
}
