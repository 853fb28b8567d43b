use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn convexint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convexint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("convexint-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn check_instance_a_exits_zero() {
    let path = fixture("instance_a.json");
    let out = convexint(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["arithmetic"], "exact");
    assert_eq!(v["status"], "pass");
    assert_eq!(v["queries"].as_array().unwrap().len(), 7);
}

#[test]
fn check_is_reproducible_across_job_counts() {
    let path = fixture("instance_a.json");
    let p = path.to_str().unwrap();
    let a = convexint(&["check", p, "--seed", "9", "--jobs", "1"]);
    let b = convexint(&["check", p, "--seed", "9", "--jobs", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn text_format_reports_each_query() {
    let path = fixture("instance_a.json");
    let out = convexint(&["--format", "text", "check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sum_rule"), "{text}");
    assert!(text.contains("pass"), "{text}");
}

#[test]
fn malformed_json_exits_two_with_position() {
    let path = scratch("broken.json", "{\n  \"dimension\": 1,\n  \"atoms\": [\n}\n");
    let out = convexint(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn bad_rational_exits_two() {
    let text = std::fs::read_to_string(fixture("instance_a.json"))
        .unwrap()
        .replacen("\"weight\": \"1\"", "\"weight\": \"1/0\"", 1);
    let path = scratch("zero_den.json", &text);
    let out = convexint(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_two() {
    let out = convexint(&["check", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn verify_accepts_valid_and_rejects_falsified() {
    let good = convexint(&["verify", fixture("valid_certificate.json").to_str().unwrap()]);
    assert_eq!(good.status.code(), Some(0), "{}", String::from_utf8_lossy(&good.stdout));
    let bad = convexint(&["verify", fixture("falsified_certificate.json").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    let v = json(&bad);
    assert_eq!(v["status"], "fail");
    assert!(v["counterexample"]["description"].is_string());
}

#[test]
fn generate_is_deterministic_and_checkable() {
    let a = convexint(&["generate", "--seed", "4", "--profile", "kinked"]);
    let b = convexint(&["generate", "--seed", "4", "--profile", "kinked"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let path = scratch("generated.json", std::str::from_utf8(&a.stdout).unwrap());
    let out = convexint(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_profile_is_rejected() {
    let out = convexint(&["generate", "--profile", "spiky"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn l2_example_reports_float_arithmetic() {
    let out = convexint(&["examples", "l2", "--dim", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["arithmetic"], "float");
    assert_eq!(v["status"], "pass");
}

#[test]
fn l1_example_runs() {
    let out = convexint(&["--format", "text", "examples", "l1", "--nmax", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
