use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_villadsen")).args(args).output().expect("binary runs")
}

fn run_on(cmd: &str, files: &[&str], extra: &[&str]) -> Output {
    let paths: Vec<String> = files.iter().map(|f| data(f).display().to_string()).collect();
    let mut args = vec![cmd];
    args.extend(paths.iter().map(String::as_str));
    args.extend(extra);
    run(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn realized_system_reports_its_radius() {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("rc-3-2.toml");
    let out = run(&["realize", "--rc", "3/2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(&["invariants", path.to_str().unwrap(), "--depth", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["invariants"]["rc"]["exact"], "3/2");
    assert_eq!(v["invariants"]["rc"]["truncation_stage"], 30);
    assert_eq!(v["witness"]["outcome"], "found");
}

#[test]
fn s2_against_s4_differs_by_rc() {
    let out = run_on("classify", &["s2.toml", "s4.toml"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = &json(&out)["classify"];
    assert_eq!(c["verdict"], "NotIsomorphic");
    assert_eq!(c["evidence"]["rc"]["left"]["exact"], "1/2");
    assert_eq!(c["evidence"]["rc"]["right"]["exact"], "3/2");
    assert_eq!(c["evidence"]["trace"], Value::Null);
}

#[test]
fn same_shape_systems_are_isomorphic() {
    let out = run_on("classify", &["s2.toml", "s2f.toml"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["classify"]["verdict"], "Isomorphic");
}

#[test]
fn odd_squares_carry_a_prime_witness() {
    let c = json(&run_on("classify", &["odd.toml", "s2.toml"], &[]))["classify"].clone();
    assert_eq!(c["verdict"], "NotIsomorphic");
    assert_eq!(c["evidence"]["k0"]["comparison"]["witness"], 2);
}

#[test]
fn undetermined_verdict_exits_two() {
    let out = run_on("classify", &["hilbert.toml", "hilbert.toml"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["classify"]["verdict"], "Undetermined");
}

#[test]
fn zero_multiplicity_is_a_structural_error() {
    let out = run_on("validate", &["bad.toml"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("s_1,2 is 0"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn schema_errors_name_the_line() {
    let out = run_on("invariants", &["typo.toml"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 2") && err.contains("expected u64"), "{err}");
}

#[test]
fn validate_passes_on_s2() {
    let out = run_on("validate", &["s2.toml"], &["--stages", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&out)["validate"]["tail_condition"]["status"], "satisfied");
}

#[test]
fn schedule_reverifies() {
    let out = run_on("schedule", &["s2.toml", "s2f.toml"], &["--deltas", "1/4,1/8,1/16"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["reverify"]["passed"], true);
    let pairs: Vec<(u64, u64)> = v["intertwine"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["i_prime"].as_u64().unwrap(), e["i"].as_u64().unwrap()))
        .collect();
    assert_eq!(pairs, vec![(4, 5), (8, 9), (16, 17)]);
    assert_eq!(v["intertwine"]["round_trips"][0]["trace_bound"]["left"], "2/9");
}

#[test]
fn bad_deltas_are_input_errors() {
    let out = run_on("schedule", &["s2.toml", "s2f.toml"], &["--deltas", "1/2,1/2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("strictly decreasing"));
}

#[test]
fn trace_approx_splits_the_measure() {
    let out = run_on("trace-approx", &["measure.toml"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let d = &json(&out)["traces"]["discretization"];
    assert_eq!(d["multiplicities"], serde_json::json!([1, 2, 1]));
    assert_eq!(d["discrepancies"], serde_json::json!(["0/1"]));
}

#[test]
fn matching_and_hall_violation() {
    let m = json(&run_on("match", &["match.toml"], &[]));
    assert_eq!(m["matching"]["result"]["result"], "matched");
    assert_eq!(m["matching"]["result"]["max_displacement"], "1/20");
    let v = json(&run_on("match", &["nomatch.toml"], &[]));
    assert_eq!(v["matching"]["result"]["result"], "violation");
    assert_eq!(v["matching"]["result"]["subset"], serde_json::json!([0, 1]));
    assert_eq!(v["matching"]["result"]["neighbourhood"], serde_json::json!([0]));
}

#[test]
fn reports_are_deterministic() {
    let a = run_on("invariants", &["s2.toml"], &[]);
    let b = run_on("invariants", &["s2.toml"], &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let t = run_on("invariants", &["s2.toml"], &["--format", "text"]);
    let text = String::from_utf8(t.stdout).unwrap();
    assert!(text.contains("command: invariants"));
    assert!(text.lines().any(|l| l.trim() == "exact: 1/2"));
}
