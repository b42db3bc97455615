use std::fs;
use std::process::{Command, Output};

use tempfile::tempdir;

fn harq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harq")).args(args).output().expect("run harq")
}

/// Parses CSV stdout into a header and rows.
fn csv(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn field(header: &[String], row: &[String], name: &str) -> f64 {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    row[k].parse().unwrap()
}

#[test]
fn single_round_outage() {
    let out = harq(&["evaluate", "--M", "0", "--power", "32.35"]);
    let (h, rows) = csv(&out);
    let outage = field(&h, &rows[0], "outage");
    assert!((outage - 1e-3).abs() < 1e-6, "{outage}");
}

#[test]
fn uniform_policy_power() {
    let out = harq(&["evaluate", "--M", "2", "--power", "12,12,12", "--protocol", "inr", "--model", "bursting"]);
    let (h, rows) = csv(&out);
    assert!((field(&h, &rows[0], "avg_power_db") - 12.0).abs() < 1e-9);
}

#[test]
fn optimize_gain() {
    let out = harq(&["optimize", "--M", "0,1", "--epsilon", "1e-3"]);
    let (h, rows) = csv(&out);
    assert_eq!(field(&h, &rows[0], "delta_phi_db"), 0.0);
    let gain = field(&h, &rows[1], "delta_phi_db");
    assert!((gain - 10.63).abs() < 0.05, "{gain}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta_phi"));
}

#[test]
fn geometric_residual() {
    let out = harq(&["optimize", "--method", "geometric", "--protocol", "inr", "--M", "20"]);
    let (h, rows) = csv(&out);
    assert!(field(&h, &rows[0], "max_residual") < 1e-8);
}

#[test]
fn figure_values() {
    let (h, rows) = csv(&harq(&["figure", "3", "--epsilon", "1e-3"]));
    assert!((field(&h, &rows[0], "short_term_R1_db") - 29.34).abs() < 0.01);
    let (h, rows) = csv(&harq(&["figure", "6", "--epsilon", "1e-3"]));
    let gap = field(&h, &rows[0], "rtd_short_term_db") - field(&h, &rows[0], "inr_short_term_db");
    assert!((gap - 1.2).abs() < 0.05, "{gap}");
}

#[test]
fn bad_input_exits_2() {
    for args in [
        &["figure", "99"][..],
        &["evaluate"],
        &["evaluate", "--bogus", "1"],
        &["evaluate", "--power", "10,10", "--M", "3"],
        &["evaluate", "--power", "10", "--protocol", "hybrid"],
        &["optimize", "--epsilon", "2"],
        &["evaluate", "--epsilon", "1e-3", "--packets", "0", "--beta", "0.5"],
    ] {
        assert_eq!(harq(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn infeasible_exits_3() {
    let out = harq(&["figure", "14", "--R", "20", "--epsilon", "1e-2", "--packets", "1000"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeatable() {
    let args = ["evaluate", "--epsilon", "1e-2", "--beta", "0.5", "--packets", "20000", "--seed", "7"];
    let a = harq(&args);
    let b = harq(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (h, rows) = csv(&a);
    assert_eq!(rows[0][h.iter().position(|c| c == "estimator").unwrap()], "monte-carlo");
}

#[test]
fn config_file_and_override() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# settings\nprotocol = inr\nM = 2\nepsilon = 1e-3\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (h, rows) = csv(&harq(&["evaluate", "--config", cfg]));
    assert_eq!(rows[0][0], "inr");
    assert_eq!(field(&h, &rows[0], "M"), 2.0);
    let (h, rows) = csv(&harq(&["--config", cfg, "evaluate", "--M", "1"]));
    assert_eq!(rows[0][0], "inr");
    assert_eq!(field(&h, &rows[0], "M"), 1.0);
    fs::write(dir.path().join("bad.conf"), "protocol inr\n").unwrap();
    let bad = dir.path().join("bad.conf");
    assert_eq!(harq(&["evaluate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn json_to_file() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = harq(&["optimize", "--M", "1", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v[0]["method"], "alg1");
    assert!((v[0]["delta_phi_db"].as_f64().unwrap() - 10.63).abs() < 0.05);
    assert!(v[0]["max_residual"].is_null());
}
