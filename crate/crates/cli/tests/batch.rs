mod support;

use std::path::PathBuf;
use std::process::{Command, Output};

use support::{bin, corpus};

fn script(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nabla-batch-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    let spec = corpus().join("stlc.spec");
    std::fs::write(
        &path,
        format!("Specification \"{}\".\n{body}", spec.display()),
    )
    .unwrap();
    path
}

fn batch(args: &[&str], files: &[PathBuf]) -> Output {
    Command::new(bin())
        .arg("--batch")
        .args(args)
        .args(files)
        .output()
        .expect("binary runs")
}

#[test]
fn good_script_exits_zero() {
    let f = script(
        "ok.thm",
        "Theorem t : forall M, {value M} -> {value M}.\nintros. search.\n",
    );
    let out = batch(&[], &[f]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("1 theorems proved"));
}

#[test]
fn failed_step_exits_one() {
    let f = script(
        "fail.thm",
        "Theorem t : forall M, {value M}.\nintros. search.\n",
    );
    let out = batch(&[], &[f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fail.thm:3"));
}

#[test]
fn syntax_error_exits_two() {
    let f = script("syntax.thm", "Theorem t : forall M, {value M} ->.\n");
    assert_eq!(batch(&[], &[f]).status.code(), Some(2));
}

#[test]
fn unfinished_proof_is_an_error() {
    let f = script(
        "open.thm",
        "Theorem t : forall M, {value M} -> {value M}.\nintros.\n",
    );
    assert_ne!(batch(&[], &[f]).status.code(), Some(0));
}

#[test]
fn trust_report_as_json() {
    let out = batch(&["--trust-json"], &[corpus().join("wn.thm")]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout
        .lines()
        .find(|l| l.starts_with('{'))
        .expect("json line");
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["overrides"], serde_json::json!(["reduce"]));
    assert!(v["uses"]
        .as_array()
        .unwrap()
        .iter()
        .any(|u| u["rule"] == "cut"));
}
