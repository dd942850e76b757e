//! Exit codes and output determinism of the `carpet` binary.

use std::path::Path;
use std::process::{Command, Output};

fn carpet(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carpet")).arg("--cache-dir").arg(cache).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sc = carpet(dir.path(), &["validate", "--builtin", "sc"]);
    assert_eq!(code(&sc), 0, "{}", String::from_utf8_lossy(&sc.stderr));
    let report: serde_json::Value = serde_json::from_slice(&sc.stdout).unwrap();
    assert!(report.is_object());

    // the gasket declares classes it does not have
    assert_eq!(code(&carpet(dir.path(), &["validate", "--builtin", "gasket"])), 1);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"frame\": [").unwrap();
    let o = carpet(dir.path(), &["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
}

#[test]
fn fit_needs_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    std::fs::write(&csv, "m,lambda,sigma,delta,R\n1,0.0986,1.979,1.333,0.264\n2,0.0978,2.994,2.382,0.285\n").unwrap();
    assert_eq!(code(&carpet(dir.path(), &["fit", "--builtin", "sc", "--table", csv.to_str().unwrap()])), 4);
}

#[test]
fn check_b_gates_on_class() {
    let dir = tempfile::tempdir().unwrap();
    let o = carpet(dir.path(), &["check-b", &data("barred_hsc.json"), "--depth", "2"]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_b_on_the_sierpinski_carpet() {
    let dir = tempfile::tempdir().unwrap();
    let o = carpet(dir.path(), &["check-b", "--builtin", "sc", "--m-max", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["verdict"], "bounded-within-range");
    assert_eq!(r["path"], "corner");
}

#[test]
fn exports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["export", "graph", "--builtin", "hsc", "--level", "2"];
    let cold = carpet(dir.path(), &args);
    assert_eq!(code(&cold), 0);
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0, "cache entry written");
    let hit = carpet(dir.path(), &args);
    assert_eq!(cold.stdout, hit.stdout);

    let other = tempfile::tempdir().unwrap();
    let mut one = vec!["--threads", "1"];
    one.extend_from_slice(&args);
    let single = carpet(other.path(), &one);
    assert_eq!(code(&single), 0);
    assert_eq!(cold.stdout, single.stdout);

    let p = ["export", "partition", "--builtin", "hsc", "--level", "2"];
    let a = carpet(dir.path(), &p);
    let b = carpet(other.path(), &p);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
