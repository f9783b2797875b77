use std::path::Path;
use std::process::Command;

use asymval_cli::{run, Outcome, EXIT_DEPTH, EXIT_EPSILON, EXIT_INPUT, EXIT_OK, RAY_COLUMNS};
use tempfile::TempDir;

fn call(dir: &Path, args: &[&str]) -> Outcome {
    let mut full = vec!["asymval".to_string()];
    full.extend(args.iter().map(|a| a.replace("@", dir.to_str().unwrap())));
    run(full)
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = call(dir, args);
    assert_eq!(o.code, EXIT_OK, "{args:?}: {}", o.stderr);
    o.stdout
}

fn fails(dir: &Path, args: &[&str], code: i32) {
    let o = call(dir, args);
    assert_eq!(o.code, code, "{args:?}: {}", o.stderr);
    assert!(o.stdout.is_empty());
    assert!(o.stderr.starts_with("error") || o.stderr.contains("error:"), "{}", o.stderr);
}

fn desk(dir: &Path) {
    ok(dir, &["build", "--growth", "pow:1", "--levels", "4", "--out", "@/plan.json"]);
}

fn csv(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn build_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let summary = ok(d, &["build", "--growth", "pow:1", "--levels", "4", "--out", "@/a.json"]);
    ok(d, &["build", "--growth", "pow:1", "--levels", "4", "--out", "@/b.json"]);
    let a = std::fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.json")).unwrap());
    let rows = csv(&summary);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().map(|r| r[2].as_str()).collect::<Vec<_>>(), ["1", "13", "313", "11271"]);
    let names: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "stray files: {names:?}");
}

#[test]
fn ray_table_has_one_row_per_step() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    desk(d);
    ok(d, &["target", "--fn", "@/plan.json", "--omega", "1/2", "--out", "@/ray.json"]);
    let out = ok(d, &["ray", "--ray", "@/ray.json", "--fn", "@/plan.json", "--logr", "-3:10:25"]);
    assert_eq!(out.lines().next().unwrap(), RAY_COLUMNS);
    let rows = csv(&out);
    assert_eq!(rows.len(), 25);
    let f = |r: &Vec<String>, k: usize| r[k].parse::<f64>().unwrap();
    // Near the origin the sum is tiny, so the target is |omega| away.
    let first = &rows[0];
    assert!(f(first, 2).hypot(f(first, 3)) < 1e-3);
    assert!((f(first, 8) - 0.5 - f(first, 6)).abs() < 1e-3);
    let last = rows.last().unwrap();
    assert!((f(last, 2) - 0.5).abs() < 1e-12 && f(last, 8) < 0.07);
    assert!(rows.iter().all(|r| r[10] == "ok"));

    let json = ok(d, &["ray", "--ray", "@/ray.json", "--fn", "@/plan.json", "--logr", "-3:10:25", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 25);

    let o = call(d, &["ray", "--ray", "@/ray.json", "--fn", "@/plan.json", "--logr", "0:10:3", "--eps", "0.5", "--out", "@/t.csv"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.is_empty());
    assert!(o.stderr.starts_with("lemma1 log_R "));
    assert_eq!(csv(&std::fs::read_to_string(d.join("t.csv")).unwrap()).len(), 3);
}

#[test]
fn growth_passes_on_desk_plan() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    desk(d);
    let rows = csv(&ok(d, &["growth", "--fn", "@/plan.json", "--logr", "2:11:10"]));
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[3] == "true"));
}

#[test]
fn cantor_rows_are_disjoint() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    desk(d);
    let mut rows: Vec<(f64, f64)> = csv(&ok(d, &["cantor", "--fn", "@/plan.json", "--depth", "3"]))
        .iter()
        .map(|r| (r[4].parse().unwrap(), r[5].parse().unwrap()))
        .collect();
    assert_eq!(rows.len(), 8);
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in rows.windows(2) {
        assert!(w[0].1 < w[1].0);
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fails(d, &["build", "--growth", "pow:0", "--out", "@/x.json"], EXIT_INPUT);
    fails(d, &["build", "--growth", "table:@/missing.csv", "--out", "@/x.json"], EXIT_INPUT);
    fails(d, &["frobnicate"], EXIT_INPUT);
    assert!(!d.join("x.json").exists());
    desk(d);
    fails(d, &["target", "--fn", "@/plan.json", "--omega", "1/2", "--in-sector", "10101", "--out", "@/r.json"], EXIT_DEPTH);
    fails(d, &["target", "--fn", "@/plan.json", "--omega", "1/2+", "--out", "@/r.json"], EXIT_INPUT);
    // Indices past the fourth level need a deeper plan.
    fails(d, &["target", "--fn", "@/plan.json", "--omega", "7", "--out", "@/r.json"], EXIT_DEPTH);
    ok(d, &["target", "--fn", "@/plan.json", "--omega", "1/2", "--out", "@/ray.json"]);
    fails(d, &["ray", "--ray", "@/ray.json", "--fn", "@/plan.json", "--logr", "0:10"], EXIT_INPUT);
    fails(d, &["ray", "--ray", "@/ray.json", "--fn", "@/plan.json", "--logr", "0:10:4", "--eps", "1e-9"], EXIT_EPSILON);

    ok(d, &["build", "--growth", "pow:2", "--levels", "4", "--out", "@/other.json"]);
    fails(d, &["ray", "--ray", "@/ray.json", "--fn", "@/other.json", "--logr", "0:10:4"], EXIT_INPUT);
    let text = std::fs::read_to_string(d.join("plan.json")).unwrap();
    std::fs::write(d.join("bad.json"), text.replacen("\"13\"", "\"14\"", 1)).unwrap();
    fails(d, &["growth", "--fn", "@/bad.json", "--logr", "2:3:2"], EXIT_INPUT);

    let help = call(d, &["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("build"));
}

#[test]
fn in_sector_target_lands_in_the_prefix() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    desk(d);
    let out = ok(d, &["target", "--fn", "@/plan.json", "--omega", "1/2", "--in-sector", "01", "--out", "@/ray01.json"]);
    assert!(out.lines().next().unwrap().starts_with("bits 01"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("ray01.json")).unwrap()).unwrap();
    assert_eq!(doc["target"]["achieved_re"], "1/2");
    assert_eq!(doc["target"]["achieved_im"], "0");
    assert_eq!(doc["target"]["indices"], serde_json::json!([2]));
    let out = ok(d, &["target", "--fn", "@/plan.json", "--omega", "1/2", "--in-sector", "11", "--out", "@/ray.json"]);
    assert!(out.lines().next().unwrap().starts_with("bits 11"));
    let out = ok(d, &["target", "--fn", "@/plan.json", "--omega", "0", "--in-sector", "10", "--out", "@/zero.json"]);
    assert!(out.lines().next().unwrap().starts_with("bits 10"));
    // Forcing bit two off pushes the fresh indices past level four.
    fails(d, &["target", "--fn", "@/plan.json", "--omega", "1/2", "--in-sector", "10", "--out", "@/r.json"], EXIT_DEPTH);
    let inf = ok(d, &["target", "--fn", "@/plan.json", "--infinity", "--out", "@/inf.json"]);
    assert!(inf.starts_with("bits "));
}

#[test]
fn binary_reports_exit_code_and_reads_precision_from_env() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let bin = env!("CARGO_BIN_EXE_asymval");
    let out = Command::new(bin).args(["build", "--growth", "pow:0", "--out"]).arg(d.join("x.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_INPUT));
    assert!(out.stdout.is_empty());
    let out = Command::new(bin)
        .env("ASYMVAL_PRECISION", "96")
        .args(["build", "--growth", "pow:1", "--levels", "3", "--out"])
        .arg(d.join("p.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("p.json")).unwrap()).unwrap();
    assert_eq!(doc["precision_bits"], 96);
}
