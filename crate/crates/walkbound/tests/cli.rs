//! End-to-end tests of the installed binary: exit codes, format parity,
//! determinism of seeded runs, and the matrix file round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_walkbound"))
}

fn write_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("walkbound-cli-it");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

const UNIFORM4: &str =
    "4\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n";
const LAZY2: &str = "2\n0.7 0.3\n0.3 0.7\n";

#[test]
fn analyze_exits_zero_on_a_valid_chain() {
    let path = write_file("ok.mat", LAZY2);
    let out = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["n"], 2);
    assert_eq!(parsed["symmetric"], true);
}

#[test]
fn analyze_exits_two_and_names_the_bad_row() {
    let path = write_file("badrow.mat", "2\n0.6 0.3\n0.5 0.5\n");
    let out = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error: "), "stderr: {err}");
    assert!(err.contains("row 0"), "stderr: {err}");
}

#[test]
fn missing_file_exits_two() {
    let out = run(&["analyze", "--input", "/nonexistent/nowhere.mat"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: "));
}

#[test]
fn unknown_flag_exits_two() {
    let path = write_file("flags.mat", LAZY2);
    let out = run(&["analyze", "--input", path.to_str().unwrap(), "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_needs_a_comparison_source() {
    let path = write_file("lonely.mat", LAZY2);
    let out = run(&["verify", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--compare or --noise"));
}

#[test]
fn verify_full_battery_exits_zero() {
    let path = write_file("battery.mat", UNIFORM4);
    let out = run(&[
        "verify",
        "--input",
        path.to_str().unwrap(),
        "--noise",
        "rand",
        "--magnitude",
        "0.05",
        "--seed",
        "42",
        "--marked",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["reports"].as_array().unwrap().len(), 6);
    assert_eq!(parsed["violations"], 0);
}

#[test]
fn marked_index_out_of_range_exits_two() {
    let path = write_file("range.mat", LAZY2);
    let out = run(&[
        "verify",
        "--input",
        path.to_str().unwrap(),
        "--noise",
        "rand",
        "--magnitude",
        "0.01",
        "--marked",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("out of range"));
}

#[test]
fn truncation_noise_requires_bits() {
    let path = write_file("trunc.mat", LAZY2);
    let out = run(&[
        "perturb",
        "--input",
        path.to_str().unwrap(),
        "--noise",
        "trunc",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--bits"));
}

#[test]
fn seeded_sweeps_are_byte_identical() {
    let args = [
        "sweep",
        "--n-min",
        "2",
        "--n-max",
        "8",
        "--trials",
        "20",
        "--magnitude",
        "0.03",
        "--seed",
        "11",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));
    assert!(!stdout(&first).is_empty());
}

#[test]
fn json_and_csv_verify_reports_carry_identical_numbers() {
    let path = write_file("parity.mat", UNIFORM4);
    let base = [
        "verify",
        "--input",
        path.to_str().unwrap(),
        "--noise",
        "rand",
        "--magnitude",
        "0.05",
        "--seed",
        "7",
        "--marked",
        "3",
    ];
    let json_out = run(&base);
    let mut csv_args = base.to_vec();
    csv_args.extend(["--format", "csv"]);
    let csv_out = run(&csv_args);
    assert_eq!(json_out.status.code(), Some(0));
    assert_eq!(csv_out.status.code(), Some(0));

    let parsed: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    let csv_text = stdout(&csv_out);
    let mut csv_lines = csv_text.lines();
    let header: Vec<&str> = csv_lines.next().unwrap().split(',').collect();
    let lhs_col = header.iter().position(|h| *h == "lhs").unwrap();
    let rhs_col = header.iter().position(|h| *h == "rhs").unwrap();
    let id_col = header.iter().position(|h| *h == "bound_id").unwrap();

    let reports = parsed["reports"].as_array().unwrap();
    let mut compared = 0;
    for line in csv_lines {
        let cells: Vec<&str> = line.split(',').collect();
        let report = reports
            .iter()
            .find(|r| r["bound_id"] == cells[id_col])
            .expect("bound present in both formats");
        for (col, key) in [(lhs_col, "lhs"), (rhs_col, "rhs")] {
            let from_csv: f64 = cells[col].parse().unwrap();
            let from_json = report[key].as_f64().unwrap();
            let scale = from_json.abs().max(1.0);
            assert!(
                (from_csv - from_json).abs() <= 1e-15 * scale,
                "{key} differs for {}: {from_csv} vs {from_json}",
                cells[id_col]
            );
        }
        compared += 1;
    }
    assert_eq!(compared, reports.len());
}

#[test]
fn output_flag_writes_the_report_to_a_file() {
    let input = write_file("tofile.mat", LAZY2);
    let target = std::env::temp_dir()
        .join("walkbound-cli-it")
        .join("report.json");
    let _ = std::fs::remove_file(&target);
    let out = run(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--output",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(parsed["n"], 2);
}

#[test]
fn saved_perturbed_matrix_round_trips_through_analyze() {
    let input = write_file("save-src.mat", UNIFORM4);
    let saved = std::env::temp_dir()
        .join("walkbound-cli-it")
        .join("saved-q.mat");
    let _ = std::fs::remove_file(&saved);
    let out = run(&[
        "perturb",
        "--input",
        input.to_str().unwrap(),
        "--noise",
        "rand",
        "--magnitude",
        "0.05",
        "--seed",
        "3",
        "--save-matrix",
        saved.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let again = run(&["analyze", "--input", saved.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0), "stderr: {}", stderr(&again));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(parsed["n"], 4);
    assert_eq!(parsed["symmetric"], true);
}

#[test]
fn quantize_phase_extraction_respects_the_dimension_guard() {
    // 17 states puts the walk at 289 dimensions, past the phases cap.
    let n = 17;
    let row = format!("{} ", 1.0 / n as f64).repeat(n);
    let text = format!("{n}\n{}", format!("{row}\n").repeat(n));
    let path = write_file("big.mat", &text);
    let out = run(&["quantize", "--input", path.to_str().unwrap(), "--phases"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exceeds the limit"));

    let plain = run(&["quantize", "--input", path.to_str().unwrap()]);
    assert_eq!(plain.status.code(), Some(0));
}

#[test]
fn marked_fraction_is_accepted_by_verify() {
    let path = write_file("frac.mat", UNIFORM4);
    let out = run(&[
        "verify",
        "--input",
        path.to_str().unwrap(),
        "--noise",
        "rand",
        "--magnitude",
        "0.02",
        "--marked-frac",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ids: Vec<&str> = parsed["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["bound_id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"hitting"));
}

#[test]
fn sample_reports_the_triangle_check() {
    let q = write_file("sample-q.mat", "2\n0.7 0.3\n0.5 0.5\n");
    let p = write_file("sample-p.mat", "2\n0.75 0.25\n0.5 0.5\n");
    let out = run(&[
        "sample",
        "--input",
        q.to_str().unwrap(),
        "--steps",
        "4",
        "--eta",
        "0.01",
        "--seed",
        "5",
        "--compare",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["report"]["bound_id"], "quantum_sample");
    assert_eq!(parsed["report"]["pass"], true);
}

#[test]
fn comment_and_blank_lines_parse_in_matrix_files() {
    let text = "# a two-state chain\n\n2\n# rows follow\n0.7 0.3\n0.3 0.7\n";
    let path = write_file("comments.mat", text);
    let out = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
}
