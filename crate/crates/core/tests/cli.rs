// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fraclat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclat")).args(args).output().expect("binary runs")
}

fn scratch_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fraclat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn kernel_csv_starts_with_k1() {
    let out = fraclat(&["kernel", "--s", "0.5", "--max-m", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,K,K_scaled,cumulative"));
    let k1: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((k1 - 4.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-13);
    assert_eq!(lines.count(), 2);
}

#[test]
fn verify_kernel_suite_passes() {
    let out = fraclat(&["verify", "--suite", "kernel", "--s", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 3);
    let names: Vec<&str> = reports.iter().map(|r| r["check_name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(doc["passed"], Value::Bool(true));
}

#[test]
fn verify_output_is_deterministic() {
    let a = fraclat(&["verify", "--suite", "classical-heat,symbol", "--seed", "5"]);
    let b = fraclat(&["verify", "--suite", "symbol", "--suite", "classical-heat", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn empty_selection_and_bad_flags_are_usage_errors() {
    assert_eq!(fraclat(&["verify"]).status.code(), Some(2));
    assert_eq!(fraclat(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(fraclat(&["kernel", "--s", "1.5"]).status.code(), Some(2));
    assert_eq!(fraclat(&["gamma", "--q", "0.5", "--input", "x.json", "--x", "0"]).status.code(), Some(2));
    assert_eq!(fraclat(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let cfg = scratch_file("cfg.json", r#"{"check_selection": ["kernel"], "output_format": "csv", "s": 0.25}"#);
    let out = fraclat(&["verify", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    assert!(stdout_json(&out)["reports"].is_array());
    let bad = scratch_file("bad.json", r#"{"unknown_key": 1}"#);
    assert_eq!(fraclat(&["verify", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn evolve_returns_lattice_function() {
    let f = scratch_file("f.json", r#"{"lo": 0, "values": [1.0]}"#);
    let out = fraclat(&["evolve", "--s", "0.5", "--t", "1", "--input", f.to_str().unwrap(), "--window", "-2,2"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["lo"], -2);
    let values = doc["values"].as_array().unwrap();
    assert_eq!(values.len(), 5);
    // p_1(0, 0) at s = 1/2
    assert!((values[2].as_f64().unwrap() - 0.3421515443446216).abs() < 1e-12);
}

#[test]
fn square_reports_values_and_errors() {
    let f = scratch_file("g.json", r#"{"lo": 0, "values": [1.0]}"#);
    let out = fraclat(&["square", "--kind", "G", "--input", f.to_str().unwrap(), "--window", "-1,1"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    for x in ["-1", "0", "1"] {
        assert!(doc["values"][x].as_f64().unwrap() > 0.0);
        assert!(doc["errors"][x].as_f64().unwrap() >= 0.0);
    }
    let missing = fraclat(&["square", "--kind", "GtU", "--input", f.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn simulate_compensator_check_passes() {
    let out = fraclat(&["simulate", "--s", "0.5", "--t", "0.5", "--paths", "4000", "--seed", "3", "--check", "compensator"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["report"]["passed"], Value::Bool(true));
}

#[test]
fn schrodinger_methods_agree() {
    let u = scratch_file("u.json", r#"{"lo": 0, "values": [1.0]}"#);
    let f = scratch_file("h.json", r#"{"lo": 0, "values": [1.0]}"#);
    let (u, f) = (u.to_str().unwrap(), f.to_str().unwrap());
    let exp = stdout_json(&fraclat(&["schrodinger", "--t", "1", "--potential", u, "--input", f, "--window", "0,0"]));
    let fk = stdout_json(&fraclat(&[
        "schrodinger", "--t", "1", "--potential", u, "--input", f, "--window", "0,0", "--method", "fk", "--paths", "20000",
    ]));
    let a = exp["function"]["values"][0].as_f64().unwrap();
    let b = fk["function"]["values"][0].as_f64().unwrap();
    let se = fk["diagnostics"]["standard_errors"]["values"][0].as_f64().unwrap();
    assert!((a - b).abs() < 4.0 * se + 1e-6, "matrix {a}, Monte Carlo {b} +- {se}");
}
