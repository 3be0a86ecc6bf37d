use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn varleb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varleb")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs a config and returns (exit code, report).
fn run(config: Value, extra: &[&str]) -> (i32, Value) {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "config.json", &config);
    let out = dir.path().join("report.json");
    let mut args = vec!["--config", s(&cfg), "--out", s(&out), "--quiet"];
    args.extend_from_slice(extra);
    let o = varleb(&args);
    let code = o.status.code().unwrap();
    let report = std::fs::read_to_string(&out).map(|t| serde_json::from_str(&t).unwrap()).unwrap_or(Value::Null);
    (code, report)
}

fn constant_exp(v: f64) -> Value {
    json!({ "kind": "constant", "params": { "value": v } })
}

fn norm_config() -> Value {
    json!({
        "command": "norm",
        "domain": { "lo": [0.0], "hi": [1.0] },
        "inputs": {
            "f": { "kind": "constant", "params": { "value": 3.0 } },
            "p": constant_exp(2.0),
        },
    })
}

fn interp_config() -> Value {
    let endpoint = |p: f64, q: f64| {
        json!({
            "p": [constant_exp(p), constant_exp(p)],
            "q": constant_exp(q),
            "w": [{ "kind": "constant", "params": { "value": 1.0 } }, { "kind": "constant", "params": { "value": 1.0 } }],
            "bound": 1.0,
        })
    };
    json!({
        "command": "interp-verify",
        "domain": { "lo": [0.0], "hi": [1.0] },
        "resolution": 257,
        "seed": 11,
        "inputs": {
            "endpoint0": endpoint(4.0, 2.0),
            "endpoint1": endpoint(2.0, 1.0),
            "theta": 0.5,
            "operator": { "kind": "pointwise_product", "arity": 2 },
            "trials": 50,
        },
    })
}

#[test]
fn norm_of_a_constant() {
    let (code, rep) = run(norm_config(), &[]);
    assert_eq!(code, 0);
    assert!((rep["results"]["value"].as_f64().unwrap() - 3.0).abs() <= 1e-10);
    assert_eq!(rep["config"]["resolution"], 4096);
    assert_eq!(rep["config"]["rel_tol"], 1e-10);
    assert_eq!(rep["schema_version"], 1);
}

#[test]
fn two_to_one_with_unit_weight() {
    let cfg = json!({
        "command": "two-to-one",
        "domain": { "lo": [0.0], "hi": [1.0] },
        "resolution": 1025,
        "inputs": {
            "w": { "kind": "constant", "params": { "value": 1.0 } },
            "spec": { "p": [constant_exp(2.0)], "r": [1.5] },
        },
    });
    let (code, rep) = run(cfg, &[]);
    assert_eq!(code, 0, "{rep}");
    assert!(rep["results"]["rel_error"].as_f64().unwrap() <= 1e-9);
    assert!(!rep["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn failed_identity_exits_with_two() {
    let cfg = json!({
        "command": "two-to-one",
        "domain": { "lo": [0.0], "hi": [1.0] },
        "resolution": 513,
        "inputs": {
            "w": { "kind": "power", "params": { "center": [0.3], "exponent": 0.2 } },
            "spec": { "p": [constant_exp(2.0)], "r": [1.5] },
            "identity_tol": -1.0,
        },
    });
    let (code, rep) = run(cfg, &[]);
    assert_eq!(code, 2);
    assert!(rep["results"]["rel_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn translate_family_is_noncompact() {
    let cfg = json!({
        "command": "rk-classify",
        "domain": { "lo": [0.0], "hi": [10.5] },
        "inputs": {
            "family": {
                "base": { "kind": "bump", "params": { "center": [0.5], "radius": 0.5 } },
                "generator": { "kind": "translate", "count": 10, "step": 1.0 },
            },
            "p": constant_exp(2.0),
            "rk": { "x0": [0.0] },
        },
    });
    let (code, rep) = run(cfg, &[]);
    assert_eq!(code, 0);
    assert_eq!(rep["results"]["verdict"], "consistent-noncompact");
    assert_eq!(rep["results"]["failing_clauses"], json!(["vanishing"]));
}

fn strip_time(mut v: Value) -> Value {
    v["provenance"]["wall_time_ms"] = Value::Null;
    v
}

#[test]
fn runs_are_deterministic() {
    let (_, a) = run(interp_config(), &[]);
    let (_, b) = run(interp_config(), &[]);
    assert_eq!(strip_time(a.clone()), strip_time(b));
    let (_, c) = run(interp_config(), &["--seed", "12"]);
    assert_ne!(a["results"]["worst_ratio"], c["results"]["worst_ratio"]);
    assert_eq!(c["provenance"]["seed"], 12);
}

#[test]
fn replay_reproduces_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "config.json", &interp_config());
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    assert_eq!(varleb(&["--config", s(&cfg), "--out", s(&first), "--quiet"]).status.code(), Some(0));
    let o = varleb(&["replay", s(&first), "--out", s(&second)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("matches source"));
    let a: Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&std::fs::read_to_string(&second).unwrap()).unwrap();
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["config"], b["config"]);
    assert_eq!(b["replay"]["matches_source"], true);
}

#[test]
fn replay_with_finer_grid_stays_close() {
    let mut cfg = norm_config();
    cfg["resolution"] = json!(513);
    cfg["inputs"]["f"] = json!({ "kind": "gaussian", "params": { "center": [0.5], "width": 0.2 } });
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "config.json", &cfg);
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    varleb(&["--config", s(&path), "--out", s(&first), "--quiet"]);
    let o = varleb(&["replay", s(&first), "--resolution", "1025", "--out", s(&second), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let b: Value = serde_json::from_str(&std::fs::read_to_string(&second).unwrap()).unwrap();
    assert_eq!(b["config"]["resolution"], 1025);
    assert_eq!(b["replay"]["matches_source"], false);
    assert!(b["replay"]["max_rel_difference"].as_f64().unwrap() < 1e-3);
}

#[test]
fn misspelled_key_is_a_schema_error() {
    let mut cfg = norm_config();
    cfg["inputs"]["f"]["params"] = json!({ "valeu": 3.0 });
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "config.json", &cfg);
    let o = varleb(&["--config", s(&path)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("schema error") && err.contains("inputs.f"), "{err}");

    let mut cfg = norm_config();
    cfg["cube_dpeth"] = json!(3);
    let path = write(&dir, "top.json", &cfg);
    let o = varleb(&["--config", s(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cube_dpeth"));
}

#[test]
fn report_goes_to_stdout_without_out() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "config.json", &norm_config());
    let o = varleb(&["--config", s(&path)]);
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["command"], "norm");
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "config.json", &norm_config());
    let bad = Command::new(env!("CARGO_BIN_EXE_varleb"))
        .args(["--config", s(&path), "--quiet"])
        .env("VARLEB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let good = Command::new(env!("CARGO_BIN_EXE_varleb"))
        .args(["--config", s(&path), "--quiet"])
        .env("VARLEB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(good.status.code(), Some(0));
}

#[test]
fn maximal_of_an_indicator() {
    let radii: Vec<f64> = (1..=64).map(|k| 0.125 * k as f64).collect();
    let cfg = json!({
        "command": "maximal",
        "domain": { "lo": [-4.0], "hi": [12.0] },
        "resolution": 2049,
        "inputs": {
            "f": { "kind": "indicator", "params": { "lo": [0.0], "hi": [1.0] } },
            "radii": radii,
            "at": [[2.0], [4.0]],
        },
    });
    let (code, rep) = run(cfg, &[]);
    assert_eq!(code, 0, "{rep}");
    for (k, x) in [2.0, 4.0].iter().enumerate() {
        let v = rep["results"]["at"][k]["value"].as_f64().unwrap();
        assert!((v - 1.0 / (2.0 * x)).abs() < 1e-2, "{x}: {v}");
    }
}

#[test]
fn extrapolation_ladder_reports_range_errors() {
    let weight = json!({ "kind": "power", "params": { "exponent": 0.0625 } });
    let one = json!({ "kind": "constant", "params": { "value": 1.0 } });
    let cfg = json!({
        "command": "extrapolate",
        "domain": { "lo": [-1.0], "hi": [1.0] },
        "resolution": 512,
        "inputs": {
            "target": { "p": [constant_exp(8.0 / 3.0), constant_exp(8.0 / 3.0)], "r": [1.0, 1.0], "s": "inf" },
            "known": { "p": [constant_exp(2.0), constant_exp(2.0)], "r": [1.0, 1.0] },
            "w": [weight.clone(), weight],
            "w1": [one.clone(), one],
            "theta_ladder": [0.5, 0.99],
        },
    });
    let (code, rep) = run(cfg, &[]);
    assert_eq!(code, 0, "{rep}");
    let e = &rep["results"]["endpoints"];
    assert_eq!(e[0]["spec0"]["p"][0][0], 4.0);
    assert_eq!(e[0]["admissible"], true);
    assert!(e[0]["round_trip_error"].as_f64().unwrap() <= 1e-10);
    assert!(e[1]["error"].as_str().unwrap().contains("range error"));
    assert_eq!(rep["config"]["inputs"]["target"]["s"], "inf");
}
