use std::process::{Command, Output};

use serde_json::Value;

fn meanscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanscope")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn mean_of_power_two() {
    let out = meanscope(&["mean", "-g", "power(2)", "-x", "1,7", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["mean"]["value"], 5.0);
    let text = meanscope(&["mean", "-g", "power(2)", "-x", "1,7"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("mean       5\n"));
}

#[test]
fn exp_battery_is_not_subadditive() {
    let out = meanscope(&["battery", "-g", "exp(1)", "--seed", "42", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["resolution"], "not_subadditive");
    let direct = v["checkers"].as_array().unwrap().iter().find(|c| c["id"] == "subadditive_direct").unwrap();
    assert!(direct["counterexample"]["witness"].is_array());
    assert_eq!(v["generator"]["window_trimmed"], true);
}

#[test]
fn power_two_battery_is_subadditive() {
    let out = meanscope(&["battery", "-g", "power(2)", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("resolution subadditive"));
}

#[test]
fn alpha_of_quadlin() {
    let out = meanscope(&["alpha", "-g", "quadlin(1)", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["alpha"]["value"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    assert_eq!(v["alpha"]["pattern_ok"], true);
    assert_eq!(v["kinks"][0]["order"], 2);
}

#[test]
fn json_reports_are_byte_deterministic_and_round_trip() {
    let args = ["battery", "-g", "quadlin(2)", "--seed", "7", "--samples", "1500", "--json"];
    let a = meanscope(&args);
    let b = meanscope(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let again = serde_json::to_string_pretty(&v).unwrap() + "\n";
    assert_eq!(again.as_bytes(), &a.stdout[..]);
}

#[test]
fn embedded_config_reproduces_the_report() {
    let first = meanscope(&["check", "phi_concavity", "-g", "x^3 + x", "--samples", "800", "--seed", "3", "--json"]);
    let cfg = &json(&first)["config"];
    let window = format!("{}:{}", cfg["window"]["lo"], cfg["window"]["hi"]);
    let rerun = meanscope(&[
        cfg["command"].as_str().unwrap(),
        cfg["checker"].as_str().unwrap(),
        "-g",
        cfg["generators"][0].as_str().unwrap(),
        "--window",
        &window,
        "--samples",
        &cfg["samples"].to_string(),
        "--arity",
        &cfg["arity"].to_string(),
        "--seed",
        &cfg["seed"].to_string(),
        "--tol",
        &cfg["tol_rel"].to_string(),
        "--scan-grid",
        &cfg["scan_grid"].to_string(),
        "--monotone-grid",
        &cfg["monotone_grid"].to_string(),
        "--json",
    ]);
    assert_eq!(first.stdout, rerun.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["check", "psi_subadditive", "-g", "exp(0.5)", "--samples", "3000", "--json"];
    let one = Command::new(env!("CARGO_BIN_EXE_meanscope")).args(args).env("MEANSCOPE_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_meanscope")).args(args).env("MEANSCOPE_THREADS", "4").output().unwrap();
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.status.code(), Some(1));
}

#[test]
fn parse_errors_exit_64_with_a_column() {
    let out = meanscope(&["battery", "-g", "x^2 + ln(x", "--json"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(out.stdout.is_empty());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert_eq!(err["error"]["column"], 11);
    let text = meanscope(&["battery", "-g", "x^2 + ln(x"]);
    assert!(String::from_utf8_lossy(&text.stderr).contains("column 11"));
}

#[test]
fn non_monotone_generators_exit_65() {
    let out = meanscope(&["battery", "-g", "x - x^2", "--json"]);
    assert_eq!(out.status.code(), Some(65));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "generator");
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["battery"][..],
        &["battery", "-g", "log", "--bogus"],
        &["check", "no_such_checker", "-g", "log"],
        &["compare", "-g", "log"],
        &["mean", "-g", "log", "-x", "1,-2"],
        &["mean", "-g", "log", "-x", "1,5000"],
        &["alpha", "-g", "log", "--window", "3:1"],
    ] {
        assert_eq!(meanscope(args).status.code(), Some(64), "{args:?}");
    }
    let out = meanscope(&["battery", "--json", "--bogus"]);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(meanscope(&["--help"]).status.code(), Some(0));
    assert_eq!(meanscope(&["battery", "--help"]).status.code(), Some(0));
    assert_eq!(meanscope(&["--version"]).status.code(), Some(0));
}

#[test]
fn compare_exit_codes_follow_the_verdict() {
    let up = meanscope(&["compare", "-g", "power(1)", "-g", "power(2)", "--samples", "2000"]);
    assert_eq!(up.status.code(), Some(0));
    let down = meanscope(&["check", "compare_means", "-g", "power(2)", "-g", "power(1)", "--samples", "2000"]);
    assert_eq!(down.status.code(), Some(1));
    let kinked = meanscope(&["compare", "-g", "quadlin(1)", "-g", "power(2)", "--samples", "500"]);
    assert_eq!(kinked.status.code(), Some(2));
}

#[test]
fn decreasing_generators_are_reported_as_canonicalised() {
    let out = meanscope(&["battery", "-g", "-x^2", "--samples", "1500", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["generator"]["direction"], "dec");
    assert_eq!(v["generator"]["canonicalized"], true);
}
