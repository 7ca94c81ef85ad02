//! Byte-level CLI checks: golden outputs, reproducibility, format parity,
//! and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/towns.csv")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankshare"))
        .args(args)
        .env_remove("RANKSHARE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

#[test]
fn enumerate_matches_golden_file() {
    let text = stdout_of(&["enumerate", "--t", "10", "--n", "3"]);
    let expected = std::fs::read_to_string(golden("enumerate_t10_n3.csv")).unwrap();
    assert_eq!(text, expected);
    assert!(text.lines().any(|l| l == "1,7,12,0.181818181818"));
    // Header plus one row per (rank, share) pair.
    assert_eq!(text.lines().count(), 1 + 3 * 11);
}

#[test]
fn expected_matches_golden_file() {
    let text = stdout_of(&["expected", "--n", "22"]);
    let expected = std::fs::read_to_string(golden("expected_n22.csv")).unwrap();
    assert_eq!(text, expected);
    assert_eq!(text.lines().count(), 1 + 22);
}

#[test]
fn fit_matches_golden_file() {
    let input = fixture();
    let text = stdout_of(&[
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--no-renormalize",
        "--format",
        "json",
    ]);
    let expected = std::fs::read_to_string(golden("fit_towns.json")).unwrap();
    assert_eq!(text, expected);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["n"], 22);
    assert_eq!(value["observed"][0], 0.162);
}

#[test]
fn outputs_are_byte_reproducible() {
    let input = fixture();
    let input = input.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["enumerate", "--t", "8", "--n", "4", "--format", "json"],
        vec!["pdf", "--n", "4", "--k", "2", "--points", "64"],
        vec!["cdf", "--n", "5", "--k", "3", "--points", "33", "--format", "json"],
        vec!["expected", "--n", "22"],
        vec!["table", "--n", "5", "--format", "json"],
        vec!["zipf", "--n", "100"],
        vec!["simulate", "--n", "4", "--samples", "20000", "--seed", "7"],
        vec![
            "simulate", "--n", "3", "--samples", "5000", "--seed", "9", "--mode", "discrete",
            "--t", "100", "--format", "json",
        ],
        vec!["fit", "--input", input, "--no-renormalize", "--format", "json"],
    ];
    for args in cases {
        let first = stdout_of(&args);
        let second = stdout_of(&args);
        assert_eq!(first, second, "{args:?} not reproducible");
        assert!(!first.is_empty());
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let base = stdout_of(&["simulate", "--n", "4", "--samples", "30000", "--seed", "3"]);
    let single = stdout_of(&[
        "simulate", "--n", "4", "--samples", "30000", "--seed", "3", "--threads", "1",
    ]);
    assert_eq!(base, single);

    let out = Command::new(env!("CARGO_BIN_EXE_rankshare"))
        .args(["enumerate", "--t", "30", "--n", "5"])
        .env("RANKSHARE_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(out.stdout, run(&["enumerate", "--t", "30", "--n", "5"]).stdout);
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let csv = stdout_of(&["expected", "--n", "9"]);
    let json = stdout_of(&["expected", "--n", "9", "--format", "json"]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let from_json: Vec<f64> = value["expected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let from_csv: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(from_csv, from_json);

    let csv = stdout_of(&["pdf", "--n", "5", "--k", "2", "--points", "11"]);
    let json = stdout_of(&["pdf", "--n", "5", "--k", "2", "--points", "11", "--format", "json"]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    for (line, point) in csv.lines().skip(1).zip(value["series"].as_array().unwrap()) {
        let mut cells = line.split(',');
        let s: f64 = cells.next().unwrap().parse().unwrap();
        let density: f64 = cells.next().unwrap().parse().unwrap();
        assert_eq!(s, point["share"].as_f64().unwrap());
        assert_eq!(density, point["density"].as_f64().unwrap());
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["pdf", "--n", "4", "--k", "2", "--points", "0"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--n", "4", "--samples", "10"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one_with_a_message() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["pdf", "--n", "1", "--k", "1", "--points", "4"],
        vec!["pdf", "--n", "4", "--k", "7", "--points", "4"],
        vec!["cdf", "--n", "4", "--k", "0", "--points", "4"],
        vec!["enumerate", "--t", "5", "--n", "0"],
        vec!["table", "--n", "2"],
        vec!["expected", "--n", "0"],
        vec!["fit", "--input", "/nonexistent/towns.csv"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?} left stderr empty");
    }
}

#[test]
fn malformed_dataset_cells_are_reported_with_coordinates() {
    let dir = std::env::temp_dir().join("rankshare-golden-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.csv");
    std::fs::write(&path, "group,A,B\nalpha,1.0,2.0\nbeta,oops,3.0\n").unwrap();
    let out = run(&["fit", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 2"), "stderr: {stderr}");
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = std::env::temp_dir().join("rankshare-golden-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("expected.csv");
    let out = run(&["expected", "--n", "6", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let from_file = std::fs::read_to_string(&path).unwrap();
    assert_eq!(from_file, stdout_of(&["expected", "--n", "6"]));
}
