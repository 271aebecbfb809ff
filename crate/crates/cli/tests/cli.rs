use std::process::{Command, Output};

use serde_json::Value;
use spinal_spectra::closed_form::{level_spectrum, LevelSpectrum};
use spinal_spectra::SpinalParams;

fn spinal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinal")).args(args).output().expect("binary runs")
}

fn stdout_json(args: &[&str]) -> Value {
    let out = spinal(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn spectrum_with_oracle_has_four_values() {
    let v = stdout_json(&["spectrum", "--d", "3", "--m", "1", "--omega", "per:1", "--level", "2", "--oracle"]);
    assert_eq!(v["spectrum"]["entries"].as_array().unwrap().len(), 4);
    assert!(v["oracle"]["max_deviation"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["oracle"]["eigenvalues"].as_array().unwrap().len(), 9);
}

#[test]
fn grigorchuk_level_one() {
    let rows = csv_rows(&spinal(&[
        "spectrum",
        "--d",
        "2",
        "--m",
        "2",
        "--omega",
        "per:0,1;1,1;1,0",
        "--level",
        "1",
        "--format",
        "csv",
    ]));
    let vals: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(vals, vec![0.5, 1.0]);
}

#[test]
fn kernel_condition_exit_code() {
    let out = spinal(&["spectrum", "--d", "2", "--m", "2", "--omega", "per:1,0", "--level", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel condition"));
}

#[test]
fn invalid_usage_exit_codes() {
    assert_eq!(spinal(&["spectrum", "--grigorchuk", "--d", "2", "--level", "1"]).status.code(), Some(2));
    assert_eq!(spinal(&["spectrum", "--d", "2", "--level", "1"]).status.code(), Some(2));
    assert_eq!(spinal(&["spectrum", "--grigorchuk", "--level", "1", "--format", "dot"]).status.code(), Some(2));
    assert_eq!(spinal(&["classify", "--grigorchuk", "--genset", "a,b"]).status.code(), Some(2));
    assert_eq!(spinal(&["spectrum", "--grigorchuk", "--erschler", "--level", "1"]).status.code(), Some(2));
}

#[test]
fn classify_grigorchuk_minimal_set() {
    let out = spinal(&["classify", "--d", "2", "--m", "2", "--omega", "per:0,1;1,1;1,0", "--genset", "a,b,c"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().next(), Some("Cantor"));
    let v = stdout_json(&["classify", "--overgroup", "--format", "json"]);
    assert_eq!(v["type"], "Intervals");
}

#[test]
fn sunic_bands_single_interval() {
    let v = stdout_json(&["bands", "--sunic-gm", "2"]);
    let bands = v["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 1);
    assert!((bands[0][0].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
    assert!((bands[0][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn grigorchuk_minimal_set_has_gaps() {
    let v = stdout_json(&["bands", "--grigorchuk", "--genset", "a,b,c", "--depths", "6,8"]);
    assert_eq!(v["type"], "Cantor");
    assert!(!v["gap_witness"]["persistent"].as_array().unwrap().is_empty());
}

#[test]
fn dos_histogram_matches_level_spectrum() {
    let rows = csv_rows(&spinal(&["dos", "--d", "2", "--m", "2", "--bins", "200"]));
    assert_eq!(rows.len(), 200);
    let mut vals = level_spectrum(&SpinalParams::grigorchuk(), 14).unwrap().expanded();
    vals.sort_by(f64::total_cmp);
    let mut cum = 0.0;
    let mut worst: f64 = 0.0;
    for r in &rows {
        let hi: f64 = r[1].parse().unwrap();
        cum += r[2].parse::<f64>().unwrap();
        let below = vals.partition_point(|&x| x <= hi) as f64 / vals.len() as f64;
        worst = worst.max((cum - below).abs());
    }
    assert!((cum - 1.0).abs() < 1e-8);
    assert!(worst <= 0.01, "histogram deviates by {worst}");
}

#[test]
fn dos_atoms_for_ternary_tree() {
    let v = stdout_json(&["dos", "--fabrykowski-gupta", "--depth", "10", "--format", "json"]);
    let represented = v["represented_mass"].as_f64().unwrap();
    let tail = v["measure"]["tail_mass"].as_f64().unwrap();
    assert!((represented + tail - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_json_round_trips() {
    let v = stdout_json(&["spectrum", "--fabrykowski-gupta", "--level", "6"]);
    let parsed: LevelSpectrum = serde_json::from_value(v["spectrum"].clone()).unwrap();
    let direct = level_spectrum(&SpinalParams::fabrykowski_gupta(), 6).unwrap();
    assert_eq!(parsed, direct);
    for (a, b) in parsed.entries.iter().zip(&direct.entries) {
        assert_eq!(a.eigenvalue.to_bits(), b.eigenvalue.to_bits());
    }
}

#[test]
fn eigenfunctions_are_seeded() {
    let args = ["eigenfunctions", "--fabrykowski-gupta", "--birth", "2", "--level", "3", "--seed", "7"];
    let (a, b) = (spinal(&args), spinal(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-10);
    // two eigenvalues born at level 2, each with (d-2)d + 1 = 4 functions at level 3
    assert_eq!(v["functions"].as_array().unwrap().len(), 8);
}

#[test]
fn eigenfunctions_in_a_ball() {
    let v = stdout_json(&["eigenfunctions", "--fabrykowski-gupta", "--birth", "2", "--xi", "|(2)", "--radius", "20"]);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-10);
    assert!(!v["functions"].as_array().unwrap().is_empty());
}

#[test]
fn kesten_matches_reference() {
    let rows = csv_rows(&spinal(&["kesten", "--erschler", "--xi", "|(1)", "--format", "csv"]));
    assert_eq!(rows.len(), 13);
    for r in rows {
        let (got, want): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((got - want).abs() < 1e-6);
    }
}

#[test]
fn graph_export_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let out = spinal(&["graph", "--grigorchuk", "--level", "3", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    // 8 vertices, 4 generators
    assert_eq!(text.lines().count(), 1 + 8 * 4);
    let dot = spinal(&["graph", "--fabrykowski-gupta", "--level", "2"]);
    assert!(String::from_utf8_lossy(&dot.stdout).starts_with("graph level2 {"));
}
