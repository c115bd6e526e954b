use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coherence-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const CONFIG: &str = r#"{"dims":[2,3],"trials":12,"seed":7,"measures":["REL_ENT","L1","L2","TRACE_NORM"],"conditions":["C1","C1'","C2a","C2b","C2c","C3"]}"#;

#[test]
fn fuzz_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CONFIG);
    let a = lab(&["fuzz", "--config", &cfg, "--workers", "1"]);
    let b = lab(&["fuzz", "--config", &cfg, "--workers", "4"]);
    let c = lab(&["fuzz", "--config", &cfg, "--workers", "4"]);
    let d = lab(&["fuzz", "--config", &cfg]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    assert_eq!(a.stdout, d.stdout);
}

#[test]
fn fuzz_report_shape_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CONFIG);
    let csv = dir.path().join("totals.csv");
    let out = lab(&["fuzz", "--config", &cfg, "--seed", "99", "--csv", csv.to_str().unwrap()]);
    let report = json(&out);
    assert_eq!(report["config"]["seed"], 99);
    assert_eq!(report["config"]["violation_threshold"], 1e-8);
    assert_eq!(report["totals"].as_array().unwrap().len(), 4 * 6);
    // trial 0 carries the injected l2 witness
    let v = report["violations"].as_array().unwrap();
    assert!(v.iter().any(|r| r["measure"] == "L2" && r["condition"] == "C2b" && r["trial"] == 0));
    assert!(v.iter().all(|r| r["witness"].is_object()));
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "measure,condition,claim,evaluated,holds,violated,inconclusive,min_residual"
    );
    assert_eq!(lines.count(), 24);
}

#[test]
fn fuzz_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"dims":[1],"trials":3,"seed":1,"measures":["L1"],"conditions":["C1"]}"#,
    );
    assert_eq!(lab(&["fuzz", "--config", &cfg]).status.code(), Some(2));
    let cfg = write(dir.path(), "cfg2.json", CONFIG);
    assert_eq!(lab(&["fuzz", "--config", &cfg, "--workers", "0"]).status.code(), Some(2));
}

#[test]
fn counterexample_numbers() {
    let r = json(&lab(&["counterexample"]));
    assert_eq!(r["report"]["lhs"], 0.125);
    assert!((r["report"]["rhs"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(r["report"]["verdict"], "VIOLATED");
    let third = (1.0f64 / 3.0).to_string();
    let r = json(&lab(&["counterexample", "--beta2", &third]));
    assert_eq!(r["report"]["verdict"], "HOLDS");
    assert!(r["report"]["residual"].as_f64().unwrap().abs() <= 1e-12);
    assert_eq!(lab(&["counterexample", "--beta2", "1.5"]).status.code(), Some(2));
}

#[test]
fn counterexample_is_deterministic() {
    assert_eq!(lab(&["counterexample"]).stdout, lab(&["counterexample"]).stdout);
}

#[test]
fn validate_channel_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let dephasing = write(
        dir.path(),
        "dephasing.json",
        r#"{"kraus":[{"rows":2,"cols":2,"matrix":[[[1,0],[0,0]],[[0,0],[0,0]]]},
                     {"rows":2,"cols":2,"matrix":[[[0,0],[0,0]],[[0,0],[1,0]]]}]}"#,
    );
    let out = lab(&["validate-channel", "--channel", &dephasing]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["mode"], "A");

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = write(
        dir.path(),
        "h.json",
        &format!(r#"{{"kraus":[{{"rows":2,"cols":2,"matrix":[[[{h},0],[{h},0]],[[{h},0],[-{h},0]]]}}]}}"#),
    );
    let out = lab(&["validate-channel", "--channel", &hadamard]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);

    let incomplete = write(
        dir.path(),
        "half.json",
        r#"{"kraus":[{"rows":2,"cols":2,"matrix":[[[1,0],[0,0]],[[0,0],[0,0]]]}]}"#,
    );
    let out = lab(&["validate-channel", "--channel", &incomplete]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["completeness_residual"], 1.0);

    let missing = dir.path().join("missing.json");
    assert_eq!(
        lab(&["validate-channel", "--channel", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn measure_json_for_plus_state() {
    let dir = tempfile::tempdir().unwrap();
    let plus = write(
        dir.path(),
        "plus.json",
        r#"{"dim":2,"matrix":[[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]]}"#,
    );
    let v = json(&lab(&["measure", "--state", &plus, "--json"]));
    let values: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert_eq!(values.len(), 5);
    assert!((values[0] - 1.0).abs() < 1e-12);
    assert!((values[1] - 1.0).abs() < 1e-12);
    assert!((values[2] - 0.5).abs() < 1e-12);
    assert!((values[3] - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
    assert!((values[4] - 1.0).abs() < 1e-9);
    assert_eq!(v[2]["not_a_monotone"], true);

    let one = json(&lab(&["measure", "--state", &plus, "--measure", "l2", "--json"]));
    assert_eq!(one[0]["measure"], "L2");
    assert_eq!(lab(&["measure", "--state", &plus, "--measure", "nope"]).status.code(), Some(2));

    let text = lab(&["measure", "--state", &plus]);
    assert!(String::from_utf8(text.stdout).unwrap().contains("NOT_A_MONOTONE"));
}

#[test]
fn measure_rejects_non_states() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"dim":2,"matrix":[[[2,0],[0,0]],[[0,0],[-1,0]]]}"#);
    let out = lab(&["measure", "--state", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn distill_output_is_a_valid_channel() {
    let dir = tempfile::tempdir().unwrap();
    let target = write(
        dir.path(),
        "t.json",
        r#"{"dim":3,"vector":[[0.6,0],[0,0.8],[0,0]]}"#,
    );
    let out = dir.path().join("k.json");
    let o = lab(&["distill", "--target", &target, "--dim", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = lab(&["validate-channel", "--channel", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));
    let ch: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(ch["kraus"].as_array().unwrap().len(), 3);

    let mixed = write(
        dir.path(),
        "m.json",
        r#"{"dim":2,"matrix":[[[0.7,0],[0.1,0.1]],[[0.1,-0.1],[0.3,0]]]}"#,
    );
    let o = lab(&["distill", "--target", &mixed, "--dim", "2"]);
    let ch = json(&o);
    assert_eq!(ch["kraus"].as_array().unwrap().len(), 4);
    assert_eq!(lab(&["distill", "--target", &mixed, "--dim", "3"]).status.code(), Some(2));
}

#[test]
fn gate_and_convert() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(
        dir.path(),
        "x.json",
        r#"{"rows":2,"cols":2,"matrix":[[[0,0],[1,0]],[[1,0],[0,0]]]}"#,
    );
    let ch = json(&lab(&["gate", "--unitary", &x]));
    assert_eq!(ch["kraus"].as_array().unwrap().len(), 2);
    let not_unitary = write(
        dir.path(),
        "n.json",
        r#"{"rows":2,"cols":2,"matrix":[[[1,0],[1,0]],[[0,0],[1,0]]]}"#,
    );
    assert_eq!(lab(&["gate", "--unitary", &not_unitary]).status.code(), Some(2));

    let psi = write(
        dir.path(),
        "psi.json",
        &format!(r#"{{"dim":2,"vector":[[{},0],[{},0]]}}"#, 0.8f64.sqrt(), 0.2f64.sqrt()),
    );
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let phi = write(dir.path(), "phi.json", &format!(r#"{{"dim":2,"vector":[[{h},0],[{h},0]]}}"#));
    let plan = json(&lab(&["convert", "--source", &psi, "--target", &phi]));
    assert!((plan["p1"].as_f64().unwrap() - 0.32).abs() < 1e-12);
    assert_eq!(plan["success_index"], 0);
    let sparse = write(dir.path(), "e0.json", r#"{"dim":2,"vector":[[1,0],[0,0]]}"#);
    assert_eq!(lab(&["convert", "--source", &sparse, "--target", &phi]).status.code(), Some(2));
}
