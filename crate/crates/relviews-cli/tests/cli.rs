use std::io::Write;
use std::process::Command;

use serde_json::Value;

use relviews::fixtures::fixture_manifest;

fn relviews(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_relviews")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn model(name: &str) -> String {
    let f = fixture_manifest().iter().find(|f| f.name == name).unwrap();
    f.model_path().display().to_string()
}

#[test]
fn exit_codes_follow_verdicts() {
    let (code, out) = relviews(&["check-lin", &model("atomic-inc"), "--bound", "6"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("check-lin atomic-inc: ok"), "{out}");

    let (code, out) = relviews(&["--format", "machine", "check-lin", &model("flat-combiner-stale-write"), "--bound", "6"]);
    assert_eq!(code, 1, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "violation");
    assert!(!v["counterexample"]["history"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_input_is_an_error() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(b"{ \"name\": \"broken\", ").unwrap();
    let path = f.path().display().to_string();
    let (code, out) = relviews(&["--format", "machine", "check-lin", &path]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "error");
    assert!(v["error"].as_str().unwrap().contains("line"), "{out}");

    let (code, _) = relviews(&["check-lin", "/nonexistent/model.json"]);
    assert_eq!(code, 2);
}

#[test]
fn histories_are_listed_shortest_first() {
    let (code, out) = relviews(&["--format", "machine", "histories", &model("atomic-inc"), "--bound", "2"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let hs: Vec<Vec<String>> = serde_json::from_value(v["histories"].clone()).unwrap();
    assert_eq!(hs[0], Vec::<String>::new());
    assert!(hs.windows(2).all(|w| w[0].len() <= w[1].len() && w[0] != w[1]));
    assert_eq!(v["stats"]["count"].as_u64(), Some(hs.len() as u64));
    let (code, text) = relviews(&["histories", &model("atomic-inc"), "--bound", "1", "--side", "abstract"]);
    assert_eq!(code, 0);
    assert!(text.contains("ε"), "{text}");
}
