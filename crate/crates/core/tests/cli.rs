mod common;

use secrisk_core::report::Report;
use std::process::Command;

fn secrisk(args: &[&str]) -> (i32, String, String) {
    let dir = common::corpus_dir();
    let out = Command::new(env!("CARGO_BIN_EXE_secrisk"))
        .args(args)
        .args(["--dns-fixture", dir.join("dns.txt").to_str().unwrap(), "--scan-fixture", dir.join("scan.txt").to_str().unwrap()])
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn trio() -> String {
    common::tests_dir().join("fixtures/table3").to_string_lossy().into_owned()
}

#[test]
fn alert_exit_code_and_masking() {
    let (code, out, _) = secrisk(&["scan", &trio(), "--offline", "--format", "json"]);
    assert_eq!(code, 2);
    let r: Report = serde_json::from_str(&out).unwrap();
    assert!(r.secrets_masked);
    assert_eq!(r.summary.alerts, 1);
    assert!(out.contains("Fm**dj") && !out.contains("Fm)4dj"));
    let (_, revealed, _) = secrisk(&["scan", &trio(), "--offline", "--format", "json", "--reveal-secrets"]);
    assert!(revealed.contains("Fm)4dj"));
}

#[test]
fn json_round_trips() {
    let (_, out, _) = secrisk(&["scan", &trio(), "--offline", "--format", "json"]);
    let r: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(secrisk_core::report::emit_json(&r, true), out);
}

#[test]
fn table3_mapping_and_threshold() {
    let (code, _, _) = secrisk(&["scan", &trio(), "--offline", "--ease-mapping", "table3"]);
    assert_eq!(code, 0);
    let (code, out, _) = secrisk(&["scan", &trio(), "--offline", "--alert-threshold", "50"]);
    assert_eq!(code, 2);
    assert!(out.contains("2 at or above 50"), "{out}");
}

#[test]
fn table_never_shows_secrets() {
    let (_, out, err) = secrisk(&["scan", &trio(), "--offline", "--reveal-secrets"]);
    assert!(!out.contains("Fm)4dj"));
    assert!(!err.is_empty());
}

#[test]
fn scale_overrides_are_echoed() {
    let (code, out, _) = secrisk(&["scan", &trio(), "--offline", "--format", "json", "--set", "scale.value.MODERATE=13"]);
    assert_eq!(code, 0);
    let r: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(r.scale_overrides, vec!["value.MODERATE=13 (default 40)"]);
    assert_eq!(r.findings[0].risk_score, 520);
}

#[test]
fn fatal_errors_exit_one() {
    assert_eq!(secrisk(&["scan", "/no/such/dir", "--offline"]).0, 1);
    assert_eq!(secrisk(&["scan", &trio(), "--bogus"]).0, 1);
    assert_eq!(secrisk(&["scan", &trio(), "--set", "nope=1"]).0, 1);
}

#[test]
fn offline_runs_are_byte_identical() {
    let a = secrisk(&["scan", common::corpus_dir().to_str().unwrap(), "--offline", "--format", "json"]);
    let b = secrisk(&["scan", common::corpus_dir().to_str().unwrap(), "--offline", "--format", "json"]);
    assert_eq!(a.1, b.1);
    let (x, y, calls) = common::offline_corpus_runs();
    assert_eq!(x, y);
    assert_eq!(calls, 0);
}
