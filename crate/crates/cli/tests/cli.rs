use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn gerbe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gerbe")).args(args).output().expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

#[test]
fn classify_levi_civita_tensor_file() {
    let path = data("levi-civita.json");
    let out = gerbe(&["cocycle", "classify", "--tensor", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["results"]["dd_class"]["class_int"], 1);
    assert_eq!(v["results"]["dd_class"]["raw"], "1/1");
    assert!(!v["checks"].as_array().unwrap().is_empty());
}

#[test]
fn short_tensor_file_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.json");
    let entries: Vec<i64> = (0..26).collect();
    std::fs::write(&path, serde_json::to_string(&entries).unwrap()).unwrap();
    let out = gerbe(&["cocycle", "classify", "--tensor", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("position 26"), "{err}");
}

#[test]
fn non_integer_entry_names_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut entries: Vec<Value> = (0..27).map(|_| Value::from(0)).collect();
    entries[4] = Value::from("x");
    std::fs::write(&path, serde_json::to_string(&entries).unwrap()).unwrap();
    let out = gerbe(&["cocycle", "classify", "--tensor", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position 4"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = gerbe(&["cocycle", "check", "--source", "coboundary", "--seed", "11", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(dir.path().join("a.json.meta.json").exists());
    let x = gerbe(&["fock", "extension", "--alpha", "-1,-1,-1", "--beta", "1,0,2", "--cutoff", "6", "--margin", "2"]);
    let y = gerbe(&["fock", "extension", "--alpha", "-1,-1,-1", "--beta", "1,0,2", "--cutoff", "6", "--margin", "2"]);
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn numerical_guard_exits_three() {
    let out = gerbe(&["dirac", "monopole", "--b", "0,0,0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical guard"));
}

#[test]
fn failed_check_exits_one() {
    let out = gerbe(&["lie", "orbit-integral", "--level", "1", "--mesh", "2x2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["checks"][0]["pass"], false);
}

#[test]
fn orbit_integral_report_fields() {
    let out = gerbe(&["lie", "orbit-integral", "--level", "3", "--mesh", "200x400"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = &v["results"];
    assert_eq!(r["expected"], 6.0);
    assert!((r["integral"].as_f64().unwrap() - 6.0).abs() < 6e-3);
    assert!(r["rel_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn renorm_sum_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let out = gerbe(&["dirac", "renorm-sum", "--cutoffs", "2,4,6", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Lambda,bare_re,bare_im,renorm_re,renorm_im");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("6,"));
}

#[test]
fn gcd_check_and_forms() {
    let v = json(&gerbe(&["forms", "gcd-check", "--f", "2,3,0"]));
    assert_eq!(v["results"]["realizable"], true);
    let v = json(&gerbe(&["forms", "dd-class"]));
    assert_eq!(v["results"]["form"], "1 * u^3 * [da1^da2^da3]");
}

#[test]
fn unknown_source_is_a_schema_error() {
    let out = gerbe(&["cocycle", "classify", "--source", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_all_runs_selected_criteria() {
    let out = gerbe(&["verify-all", "--quick", "--only", "gcd-criterion", "--only", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
}
