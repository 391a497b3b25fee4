use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dichotomy::parse_spec;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dichotomy")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&run_ok(args)).unwrap()
}

fn p(name: &str) -> String {
    spec(name).display().to_string()
}

#[test]
fn validate_exit_codes() {
    let v = json(&["validate", "--spec", &p("two_sided.json"), "--format", "json"]);
    assert_eq!(v["valid"], true);
    assert_eq!(v["states"], 4);

    let out = run(&["validate", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(spec("uniform.json")).unwrap().replace("\"pi0\": [0.5, 0.5]", "\"pi0\": [0.5, 0.5.0]");
    std::fs::write(&bad, text).unwrap();
    let out = run(&["validate", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4, column"), "{err}");

    let rowsum = dir.path().join("rowsum.json");
    let text = std::fs::read_to_string(spec("sticky.json")).unwrap().replace("[0.3, 0.7]]", "[0.3, 0.68]]");
    std::fs::write(&rowsum, text).unwrap();
    let out = run(&["validate", "--spec", rowsum.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
}

#[test]
fn usage_errors_are_argument_errors() {
    assert_eq!(run(&["decide", "--spec", &p("uniform.json")]).status.code(), Some(3));
    let out = run(&["decide", "--spec", &p("uniform.json"), "--other", &p("uniform.json"), "--delta", "0.9"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn decide_verdicts() {
    let same = json(&["decide", "--spec", &p("sticky.json"), "--other", &p("sticky.json"), "--format", "json"]);
    assert_eq!(same["verdict"], "equivalent");

    let sing = json(&["decide", "--spec", &p("sticky.json"), "--other", &p("uniform.json"), "--format", "json"]);
    assert_eq!(sing["verdict"], "mutually_singular");
    assert_eq!(sing["applied_theorem"], "B");
    assert_eq!(sing["series"]["tail_argument"]["rule"], "distinct_limits");

    // support_change ≪ uniform but not conversely.
    let gap = json(&["decide", "--spec", &p("uniform.json"), "--other", &p("support_change.json"), "--format", "json"]);
    assert_eq!(gap["verdict"], "not_A_ac_B");
    let gap = json(&["decide", "--spec", &p("support_change.json"), "--other", &p("uniform.json"), "--format", "json"]);
    assert_eq!(gap["verdict"], "not_loc_equivalent");

    let out = run(&["decide", "--spec", &p("uniform.json"), "--other", &p("banded.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn hellinger_tables() {
    let csv = run_ok(&["hellinger", "--spec", &p("sticky.json"), "--other", &p("sticky.json"), "--horizon", "5", "--format", "csv"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,H_n,partial_D2"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "1");
        assert_eq!(fields[2], "0");
    }
    let empty = run_ok(&["hellinger", "--spec", &p("sticky.json"), "--other", &p("uniform.json"), "--horizon", "0", "--format", "csv"]);
    assert_eq!(empty, "n,H_n,partial_D2\n");

    let rows = json(&["hellinger", "--spec", &p("sticky.json"), "--other", &p("uniform.json"), "--horizon", "400"]);
    let rows = rows.as_array().unwrap();
    let last = rows.last().unwrap()["H_n"].as_f64().unwrap();
    assert!(last < 0.01, "{last}");
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--spec", &p("power_alpha025.json"), "--other", &p("uniform.json"), "--horizon", "50", "--samples", "200", "--seed", "17", "--format", "csv"];
    let first = run_ok(&args);
    assert_eq!(first, run_ok(&args));
    assert!(first.starts_with("path_id,k,log_z\n"));
    assert_eq!(first.lines().count(), 1 + 200 * 50);

    let same = run_ok(&["simulate", "--spec", &p("uniform.json"), "--other", &p("uniform.json"), "--horizon", "30", "--samples", "20", "--format", "csv"]);
    assert!(same.lines().skip(1).all(|l| l.ends_with(",0")));

    let s = json(&["simulate", "--spec", &p("uniform.json"), "--other", &p("uniform.json"), "--samples", "50"]);
    assert_eq!(s["summary"]["mean_z"], 1.0);
    assert_eq!(s["summary"]["fraction_below"], 0.0);
}

#[test]
fn applications_commands() {
    let s = json(&["shift", "--spec", &p("uniform.json")]);
    assert_eq!(s["verdict"], "nonsingular");
    let s = json(&["shift", "--spec", &p("support_change.json")]);
    assert_eq!(s["verdict"], "not_loc_equivalent");
    let s = json(&["stationarize", "--spec", &p("power_alpha025.json")]);
    assert_eq!(s["verdict"], "singular_to_all_stationary");

    let s = json(&["stationarize", "--spec", &p("banded.json")]);
    assert_eq!(s["verdict"], "equivalent_stationary_found");
    // The emitted stationary spec is a valid spec file.
    let stationary = parse_spec(&s["stationary_spec"].to_string()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stationary.json");
    std::fs::write(&path, dichotomy::spec_to_json(&stationary)).unwrap();
    let d = json(&["decide", "--spec", &p("banded.json"), "--other", path.to_str().unwrap()]);
    assert_eq!(d["verdict"], "equivalent");
}

#[test]
fn oracle_check_passes_and_guards() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("paths.csv");
    let v = json(&[
        "oracle-check", "--spec", &p("banded.json"), "--other", &p("banded.json"), "--horizon", "5",
        "--dump-paths", dump.to_str().unwrap(),
    ]);
    assert_eq!(v["pass"], true);
    // With A = B only summation-order rounding remains.
    for c in v["comparisons"].as_array().unwrap() {
        assert!(c["max_abs_deviation"].as_f64().unwrap() <= 1e-14, "{c}");
    }
    let table = std::fs::read_to_string(dump).unwrap();
    assert!(table.starts_with("path,p_A,p_B,z\n"));

    let v = json(&["oracle-check", "--spec", &p("two_sided.json"), "--other", &p("two_sided.json")]);
    assert_eq!(v["pass"], true);

    let out = run(&["oracle-check", "--spec", &p("uniform.json"), "--other", &p("sticky.json"), "--horizon", "30"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn redirected_output_defaults_to_json() {
    let out = run_ok(&["validate", "--spec", &p("uniform.json")]);
    assert!(serde_json::from_str::<serde_json::Value>(&out).is_ok(), "{out}");
    let text = run_ok(&["validate", "--spec", &p("uniform.json"), "--format", "text"]);
    assert!(text.starts_with("valid:"));
}
