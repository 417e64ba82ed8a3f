use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn girthforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_girthforge")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/solve_report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

#[test]
fn bounds_for_three_six_codes() {
    for (t, n) in [("6", "20"), ("8", "70"), ("10", "170")] {
        let out = girthforge(&["bounds", "--J", "3", "--K", "6", "--girth", t]);
        assert!(out.status.success());
        let text = stdout(&out);
        assert_eq!(text.lines().next(), Some(n));
        assert!(text.contains("n = 2m"));
    }
}

#[test]
fn invalid_arguments_exit_one() {
    for args in [
        vec!["bounds", "--J", "3", "--K", "6", "--girth", "5"],
        vec!["design", "--m", "10", "--n", "20", "--J", "3", "--K", "6", "--girth", "7"],
        vec!["design", "--m", "10", "--n", "20", "--J", "30", "--K", "6", "--girth", "6"],
        vec!["design", "--m", "10", "--n", "20", "--J", "3", "--K", "6", "--girth", "6", "--mode", "BC9"],
        vec!["experiment", "--modes", ""],
        vec!["girth", "--in", "/nonexistent/file.alist"],
        vec!["frobnicate"],
    ] {
        let out = girthforge(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(girthforge(&["--help"]).status.code(), Some(0));
}

#[test]
fn design_writes_a_certifiable_alist_and_a_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    let alist = dir.path().join("h.alist");
    let report = dir.path().join("report.json");
    let out = girthforge(&[
        "design", "--m", "10", "--n", "20", "--J", "3", "--K", "6", "--girth", "8", "--mode", "BC4",
        "--time-limit", "30", "--out", alist.to_str().unwrap(), "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("optimal"));

    let g = girthforge(&["girth", "--in", alist.to_str().unwrap()]);
    assert!(g.status.success());
    let girth = stdout(&g).trim().to_string();
    assert!(girth == "acyclic" || girth.parse::<usize>().unwrap() >= 8, "{girth}");

    let json: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let validator = schema();
    let errors: Vec<String> = validator.iter_errors(&json).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(json["status"], "optimal");
    assert_eq!(json["z"], json["z_l"]);
}

#[test]
fn time_limit_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = girthforge(&[
        "design", "--m", "20", "--n", "40", "--J", "3", "--K", "6", "--girth", "8", "--mode", "BC0",
        "--time-limit", "1", "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(schema().is_valid(&json));
    assert_eq!(json["status"], "feasible-time-limit");
}

#[test]
fn peg_and_regions_render() {
    let out = girthforge(&["peg", "--m", "10", "--n", "20", "--J", "3", "--K", "6", "--girth", "8", "--seed", "4"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("deviation="));
    let out = girthforge(&["regions", "--m", "10", "--n", "20", "--J", "3", "--K", "6", "--girth", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("r_cr = "));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn experiment_streams_json_rows() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("rows.jsonl");
    let table = dir.path().join("table.txt");
    let out = Command::new(env!("CARGO_BIN_EXE_girthforge"))
        .args(["experiment", "--modes", "BC0,BC4", "--girths", "8", "--time-limit", "0.5"])
        .args(["--jsonl", jsonl.to_str().unwrap(), "--table", table.to_str().unwrap()])
        .env("GIRTHFORGE_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<Value> =
        std::fs::read_to_string(&jsonl).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 10);
    for row in &rows {
        assert_eq!(row["T"], 8);
        assert_eq!(row["error"], Value::Null);
        assert_eq!(row["certified"], true);
        assert_eq!(row["trace_monotone"], true);
    }
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.contains("BC0") && text.contains("BC4"));
}
