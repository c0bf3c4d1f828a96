use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gbf_core::library::{build_interval_theory, IntervalTheoryConfig};
use gbf_core::linalg::CMatrix;
use gbf_core::theory::TheorySpec;
use num_complex::Complex64;
use serde_json::{json, Value};

fn gbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbf"))
        .args(args)
        .env_remove("GBF_SEED")
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn reports(text: &str) -> Vec<Value> {
    serde_json::from_str::<Value>(text).unwrap().as_array().unwrap().clone()
}

#[test]
fn generated_interval_theory_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    assert!(gbf(&["generate", "interval", "-o", &a, "--d", "2", "--seed", "7"]).status.success());
    assert!(gbf(&["generate", "interval", "-o", &b, "--d", "2", "--seed", "7"]).status.success());
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(format!("{}\n", TheorySpec::from_json(&text).unwrap().to_json()), text);

    let out = gbf(&["check", &a, "--suite", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let r = reports(&String::from_utf8(out.stdout).unwrap());
    assert!(r.iter().all(|x| x["pass"] == json!(true)));
    for check in ["T1", "T5b", "P1", "P5b", "E2b", "O1"] {
        assert!(r.iter().any(|x| x["check"] == json!(check)), "{check} missing");
    }
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.json"), path(dir.path(), "b.json"));
    let env = Command::new(env!("CARGO_BIN_EXE_gbf"))
        .args(["generate", "interval", "-o", &a])
        .env("GBF_SEED", "11")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert!(gbf(&["generate", "interval", "-o", &b, "--seed", "11"]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn bad_parameters_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    assert_eq!(gbf(&["generate", "interval", "-o", &a, "--d", "0"]).status.code(), Some(2));
    assert_eq!(gbf(&["check", &path(dir.path(), "missing.json")]).status.code(), Some(2));
    fs::write(&a, "{ not json").unwrap();
    assert_eq!(gbf(&["check", &a]).status.code(), Some(2));
}

#[test]
fn perturbed_amplitude_fails_and_other_suites_still_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    assert!(gbf(&["generate", "interval", "-o", &a, "--d", "2", "--intervals", "2"]).status.success());
    let mut t = TheorySpec::from_json(&fs::read_to_string(&a).unwrap()).unwrap();
    t.amplitudes.get_mut("I1").unwrap()[1] += Complex64::new(0.5, 0.0);
    fs::write(&a, t.to_json()).unwrap();

    let out = gbf(&["check", &a, "--suite", "T"]);
    assert_eq!(out.status.code(), Some(1));
    let r = reports(&String::from_utf8(out.stdout).unwrap());
    assert!(r.iter().any(|x| x["check"] == json!("T5a") && x["pass"] == json!(false)));
    assert!(String::from_utf8(out.stderr).unwrap().contains("T5a"));

    let report = path(dir.path(), "p.json");
    let out = gbf(&["check", &a, "--suite", "P", "-r", &report]);
    assert_eq!(out.status.code(), Some(1));
    let r = reports(&fs::read_to_string(&report).unwrap());
    assert!(r.iter().any(|x| x["check"] == json!("P1") && x["pass"] == json!(true)));
    assert!(r.iter().any(|x| x["check"] == json!("P5a") && x["pass"] == json!(false)));
}

#[test]
fn queries_report_values_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = CMatrix::from_row_slice(
        2,
        2,
        &[h, h, h, -h].map(|x| Complex64::new(x, 0.0)),
    );
    let t = build_interval_theory(&IntervalTheoryConfig::bosonic(vec![hadamard])).unwrap();
    let spec = path(dir.path(), "h.json");
    fs::write(&spec, t.to_json()).unwrap();

    // boundary basis index = 2 * incoming + outgoing
    let e = |k: usize| (0..4).map(|i| if i == k { [1.0, 0.0] } else { [0.0, 0.0] }).collect::<Vec<_>>();
    let queries = json!({ "queries": [
        { "id": "born", "region": "I0", "s": [e(0), e(1)], "a": [e(0)] },
        { "id": "whole", "region": "I0", "s": [e(0), e(1)] },
        { "id": "outside", "region": "I0", "s": [e(0)], "a": [e(2)] },
        { "id": "unknown", "region": "nowhere", "s": [e(0)] },
    ]});
    let qpath = path(dir.path(), "q.json");
    fs::write(&qpath, queries.to_string()).unwrap();
    let out = gbf(&["query", &spec, &qpath]);
    assert!(out.status.success());
    let r: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r[0]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(r[0]["defined"], json!(true));
    assert!((r[1]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(r[2]["error"].as_str().unwrap().contains("containment"));
    assert!(r[3]["error"].is_string());

    // identity evolution never takes e0 to e1
    let t = build_interval_theory(&IntervalTheoryConfig::bosonic(vec![CMatrix::identity(2, 2)])).unwrap();
    fs::write(&spec, t.to_json()).unwrap();
    fs::write(&qpath, json!({ "queries": [{ "region": "I0", "s": [e(1)] }] }).to_string()).unwrap();
    let out = gbf(&["query", &spec, &qpath]);
    let r: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r[0]["defined"], json!(false));
    assert_eq!(r[0]["value"], Value::Null);
}

#[test]
fn fermionic_toy_and_union_generate() {
    let dir = tempfile::tempdir().unwrap();
    let (a, f, u) = (path(dir.path(), "a.json"), path(dir.path(), "f.json"), path(dir.path(), "u.json"));
    assert!(gbf(&["generate", "interval", "-o", &a, "--d", "1", "--intervals", "1"]).status.success());
    let toy = ["generate", "fermionic-toy", "-o", &f, "--fdeg", "0,1", "--sig", "0,0", "--intervals", "1"];
    assert!(gbf(&toy).status.success());
    assert_eq!(gbf(&["check", &f, "--suite", "T"]).status.code(), Some(0));
    assert!(gbf(&["generate", "disjoint-union", "-o", &u, "--inputs", &a, &f]).status.success());
    assert_eq!(gbf(&["check", &u, "--suite", "T"]).status.code(), Some(0));
    let out = gbf(&["describe", &u]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("union["));
    let bad = ["generate", "fermionic-toy", "-o", &f, "--fdeg", "0,0", "--sig", "0,0"];
    assert_eq!(gbf(&bad).status.code(), Some(2));
}
