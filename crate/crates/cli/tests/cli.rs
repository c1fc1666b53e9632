use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use infogain_core::entropies::{h_min_cond, Partition};
use infogain_core::io;
use infogain_core::linalg;
use infogain_core::protocols::merging_costs;
use infogain_core::rng::rng_from_seed;
use infogain_core::{ClassicallyCoherentState, DensityOperator, Measurement};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infogain")).args(args).env_remove("INFOGAIN_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn info_gain_endpoints() {
    let dir = TempDir::new().unwrap();
    let trivial = write(&dir, "trivial.json", &io::measurement_to_json(&Measurement::trivial(2)).unwrap());
    let comp = write(&dir, "comp.json", &io::measurement_to_json(&Measurement::computational(2)).unwrap());
    let o = run(&["info-gain", "--measurement", s(&trivial)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0.0\n");
    let o = run(&["info-gain", "--measurement", s(&comp)]);
    assert_eq!(stdout(&o), "1.0\n");
    let o = run(&["info-gain", "--measurement", s(&comp), "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["info_gain"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn d_max_support_violation_is_infinite() {
    let dir = TempDir::new().unwrap();
    let mixed = io::state_to_json(&DensityOperator::maximally_mixed(2)).unwrap();
    let pure = io::state_to_json(&DensityOperator::basis_state(2, 0)).unwrap();
    let pair = write(&dir, "pair.json", &format!("{{\"rho\": {mixed}, \"sigma\": {pure}}}"));
    let o = run(&["entropy", "d_max", "--state", s(&pair)]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"], "infinite");
    // Reversed arguments are finite: D_max(|0><0| || I/2) = 1.
    let pair = write(&dir, "rev.json", &format!("{{\"rho\": {pure}, \"sigma\": {mixed}}}"));
    let v: Value = serde_json::from_str(&stdout(&run(&["entropy", "d_max", "--state", s(&pair)]))).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn conditional_entropy_reports_certificate() {
    let dir = TempDir::new().unwrap();
    let mut rng = rng_from_seed(3);
    let rho = DensityOperator::new(linalg::random_density(4, 4, &mut rng), vec![2, 2]).unwrap();
    let f = write(&dir, "rho.json", &io::state_to_json(&rho).unwrap());
    let o = run(&["entropy", "h_min", "--state", s(&f), "--partition", "0|1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["certificate"]["verified"], true);
    let o = run(&["entropy", "smooth_i_max", "--state", s(&f)]);
    assert_eq!(o.status.code(), Some(2), "missing --eps is an argument error");
}

#[test]
fn merge_costs_follow_formula() {
    let dir = TempDir::new().unwrap();
    let state = ClassicallyCoherentState::random(8, 1, 2, &mut rng_from_seed(8));
    let f = write(&dir, "cc8.json", &io::coherent_state_to_json(&state).unwrap());
    let o = run(&["simulate", "merge", "--state", s(&f), "--eps", "0.25", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let t: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let h_min = h_min_cond(&state.x_ref_state(), &Partition::first_second()).unwrap().value;
    let (q, e) = merging_costs(3.0, h_min, 0.25);
    assert_eq!(t["qubits_or_bits_sent"].as_i64(), Some(q));
    assert_eq!(t["randomness_or_entanglement_used"].as_i64(), Some(e));
    assert!(t["achieved_error"].as_f64().unwrap() <= 0.25);
}

#[test]
fn argument_errors_exit_2() {
    assert_eq!(run(&["verify", ""]).status.code(), Some(2));
    assert_eq!(run(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["rate-region", "--measurement", "x.json"]).status.code(), Some(2));
    let o = run(&["info-gain", "--measurement", "/nonexistent/m.json"]);
    assert_eq!(o.status.code(), Some(2));
    let diag: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(diag["error"], "format");
}

#[test]
fn failed_check_exits_1_with_report() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "p.json", "{\"probs\": [0.3, 0.7]}");
    let o = run(&["typicality", "verify", "--dist", s(&f), "--n", "1000", "--delta", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["all_hold"], true);
    // An exponent constant far below the tightest one breaks equipartition.
    let o = run(&["typicality", "verify", "--dist", s(&f), "--n", "1000", "--delta", "0.05", "--c", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["all_hold"], false);
}

#[test]
fn rate_region_csv_and_witnesses() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "trine.json", &io::measurement_to_json(&Measurement::trine()).unwrap());
    let w = dir.path().join("w.json");
    let o = run(&["rate-region", "--measurement", s(&m), "--non-feedback", "--witness-out", s(&w)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "S,C,witness-id");
    assert_eq!(lines.len(), 34);
    let witnesses: Value = serde_json::from_str(&std::fs::read_to_string(&w).unwrap()).unwrap();
    let n = witnesses["witnesses"].as_array().unwrap().len();
    for line in &lines[1..] {
        let id: usize = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(id < n);
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = run(&["simulate", "sandwich", "--trials", "3", "--seed", "5"]);
    let b = run(&["simulate", "sandwich", "--trials", "3", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().next(), Some("achievable_c,converse_bound,gap"));
    let c = run(&["simulate", "sandwich", "--trials", "3", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);

    let env = Command::new(env!("CARGO_BIN_EXE_infogain"))
        .args(["simulate", "sandwich", "--trials", "3"])
        .env("INFOGAIN_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);

    let x = run(&["verify", "uncertainty", "--scale", "0.02", "--json"]);
    let y = run(&["verify", "uncertainty", "--scale", "0.02", "--json"]);
    assert_eq!(x.status.code(), Some(0));
    assert_eq!(x.stdout, y.stdout);
}
