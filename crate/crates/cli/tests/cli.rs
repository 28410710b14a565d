use std::path::PathBuf;

use hermval_cli::{run, EXIT_ARGUMENT, EXIT_NUMERICAL, EXIT_OK};
use serde_json::Value;

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("hermval-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

fn json(output: &str) -> Value {
    serde_json::from_str(output).unwrap()
}

#[test]
fn mean_width_of_a_square() {
    let body = temp_file(
        "square.json",
        r#"{"type": "polytope", "vertices": [[0,0],[2,0],[0,2],[2,2]]}"#,
    );
    let out = run(["hermval", "intrinsic", "1", body.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.output);
    let v = json(&out.output);
    assert_eq!(v["build"], "hermval-0.1.0");
    assert_eq!(v["convention"], "V0=chi;Haar=prob;dx=Lebesgue");
    let e = v["result"]["estimate"]["value"].as_f64().unwrap();
    assert!((e - 4.0).abs() < 1e-12);
}

#[test]
fn bad_flags_are_argument_errors() {
    assert_eq!(run(["hermval", "intrinsic"]).code, EXIT_ARGUMENT);
    assert_eq!(run(["hermval", "--samples", "0", "verify", "gr24"]).code, EXIT_ARGUMENT);
    assert_eq!(run(["hermval", "--threads", "0", "verify", "gr24"]).code, EXIT_ARGUMENT);
    let out = run(["hermval", "verify", "nonsense"]);
    assert_eq!(out.code, EXIT_ARGUMENT);
    assert_eq!(json(&out.output)["error"]["kind"], "argument");
    let out = run(["hermval", "valuation", "klain", "--of", "C,x,1"]);
    assert_eq!(out.code, EXIT_ARGUMENT);
}

#[test]
fn malformed_body_names_the_field() {
    let body = temp_file("ball.json", r#"{"type": "ball", "centre": [0,0,0,0], "radius": 1}"#);
    let out = run(["hermval", "valuation", "C", "1", "1", body.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_ARGUMENT);
    let msg = json(&out.output)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("centre"), "{msg}");
    assert!(msg.contains("ball.json"), "{msg}");
}

#[test]
fn odd_ambient_dimension_is_rejected() {
    let body = temp_file("tri.json", r#"{"type": "polytope", "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]]}"#);
    let out = run(["hermval", "valuation", "C", "1", "1", body.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_ARGUMENT);
}

#[test]
fn failed_verification_exits_numerical() {
    // two samples per plane cannot hold a 3% spread
    let out = run(["hermval", "--samples", "2", "verify", "duality"]);
    assert_eq!(out.code, EXIT_NUMERICAL, "{}", out.output);
    assert_eq!(json(&out.output)["result"]["pass"], false);
}

#[test]
fn klain_of_intrinsic_volume_is_one() {
    let out = run(["hermval", "valuation", "klain", "--of", "V,2", "--planes", "3"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.output);
    for v in json(&out.output)["result"]["values"].as_array().unwrap() {
        assert!((v["estimate"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn output_file_is_reported() {
    let path = std::env::temp_dir().join(format!("hermval-cli-{}-out.json", std::process::id()));
    let out = run(["hermval", "--out", path.to_str().unwrap(), "verify", "gr24", "--samples", "50"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(out.out_path.as_deref(), Some(path.as_path()));
}
