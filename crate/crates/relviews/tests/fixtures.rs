use std::fs;

use serde_json::Value;

use relviews::fixtures::{fixture_manifest, fixtures_dir, Expect};
use relviews::linearizability::{check_linearizable, BoundKind, LinOptions, LinVerdict};
use relviews::model_file::{load_model, load_model_file, load_outlines, load_outlines_file, model_json, outlines_json};

fn verdict(v: &Value) -> Expect {
    match v.as_str() {
        Some("ok") => Expect::Ok,
        Some("violation") => Expect::Violation,
        other => panic!("unknown verdict {other:?}"),
    }
}

#[test]
fn manifest_agrees_with_expected_files() {
    let mut on_disk: Vec<String> = fs::read_dir(fixtures_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = fixture_manifest().iter().map(|f| f.name.to_string()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
    for f in fixture_manifest() {
        let e: Value = serde_json::from_str(&fs::read_to_string(f.expected_path()).unwrap()).unwrap();
        assert_eq!(e["check_lin"]["bound"].as_u64(), Some(f.lin_bound as u64), "{}", f.name);
        assert_eq!(verdict(&e["check_lin"]["verdict"]), f.lin, "{}", f.name);
        match (f.proof, e.get("check_proof")) {
            (None, None) => {}
            (Some(p), Some(ep)) => {
                assert_eq!(verdict(&ep["verdict"]), p.verdict, "{}", f.name);
                assert_eq!(ep["obligation"].as_u64(), p.obligation.map(u64::from), "{}", f.name);
                assert_eq!(ep["failure_contains"].as_str(), p.failure_contains, "{}", f.name);
            }
            _ => panic!("{}: proof expectation differs", f.name),
        }
    }
}

#[test]
fn fixtures_load_and_round_trip() {
    for f in fixture_manifest() {
        let file = load_model_file(&f.model_path()).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        let again = load_model(&model_json(&file).to_string()).unwrap();
        assert_eq!(again.model, file.model, "{}", f.name);
        if let Some(p) = f.outline_path() {
            let os = load_outlines_file(&p, &file).unwrap_or_else(|e| panic!("{}: {e}", f.name));
            let back = load_outlines(&outlines_json(&os, &file.model).to_string(), &file).unwrap();
            assert_eq!(back, os, "{}", f.name);
        }
    }
}

#[test]
fn small_fixtures_meet_their_lin_verdicts() {
    for name in ["atomic-inc", "dcsl-cell", "dcsl-helping", "flat-combiner-stale-write", "flat-combiner-nolock"] {
        let f = fixture_manifest().iter().find(|f| f.name == name).unwrap();
        let file = load_model_file(&f.model_path()).unwrap();
        let opts = LinOptions { bound: f.lin_bound, kind: BoundKind::Events, cap: 50_000_000 };
        let r = check_linearizable(&file.model, &opts).unwrap();
        let got = match r.verdict {
            LinVerdict::NoViolation { .. } => Expect::Ok,
            LinVerdict::Counterexample(_) => Expect::Violation,
        };
        assert_eq!(got, f.lin, "{name}");
    }
}
