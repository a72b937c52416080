use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn setcalc(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_setcalc"));
    cmd.args(args).env_remove("SETCALC_CONFIG");
    if let Some(p) = config {
        cmd.env("SETCALC_CONFIG", p);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn data_rows(text: &str) -> usize {
    text.lines().filter(|l| !l.starts_with('#')).count() - 1
}

#[test]
fn value_prints_intervals() {
    let o = setcalc(&["--n", "101", "value", "sign", "--at", "0,0.5,-0.5"], None);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows, ["0,-1,1", "0.5,1,1", "-0.5,-1,-1"]);
}

#[test]
fn envelope_header_carries_gap_and_tolerances() {
    let o = setcalc(&["--n", "41", "envelope", "--fn", "sign", "--k", "4"], None);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let head = text.lines().next().unwrap();
    let gap: f64 = head.split_whitespace().find_map(|t| t.strip_prefix("gap=")).unwrap().parse().unwrap();
    assert!((gap - 2.0 / 17f64.sqrt()).abs() <= 3.0 * 0.05, "{gap}");
    assert!(head.contains("tol_rep=") && head.contains("tol_grad="));
    assert_eq!(data_rows(&text), 41);
}

#[test]
fn clarke_gradient_plot_holds_the_interval_at_the_kink() {
    let o = setcalc(&["--n", "101", "grad", "abs"], None);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l == "0,-1,1"));
    let o = setcalc(&["--n", "101", "grad", "--mode", "algebra", "add(abs, scale(-1, abs))"], None);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l == "0,0,0"));
}

#[test]
fn metric_json_reports_per_k_terms() {
    let o = setcalc(&["--n", "101", "--format", "json", "metric", "--which", "s", "sign", "zero"], None);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["metric"], "s");
    assert!(!v["per_k"].as_array().unwrap().is_empty());
    assert!(v["truncation_bound"].as_f64().unwrap() >= 0.0);
}

#[test]
fn catalog_lists_entries_as_json() {
    let o = setcalc(&["catalog", "--format", "json"], None);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    for want in ["abs", "sign", "sinlog", "softabs", "mollified"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
}

#[test]
fn out_directory_receives_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = setcalc(&["--n", "101", "--out", d, "complete", "sign", "--levels", "4"], None);
    assert_eq!(code(&o), 0);
    for f in ["element.json", "bundle.json"] {
        let p = dir.path().join(f);
        assert!(stdout(&o).contains(p.to_str().unwrap()));
        serde_json::from_str::<serde_json::Value>(&fs::read_to_string(p).unwrap()).unwrap();
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&setcalc(&["value", "nosuch", "--at", "0"], None)), 2);
    assert_eq!(code(&setcalc(&["grad", "--mode", "algebra", "frob(abs, abs)"], None)), 2);
    assert_eq!(code(&setcalc(&["--n", "3", "value", "abs", "--at", "0"], None)), 3);
    assert_eq!(code(&setcalc(&["--tol", "0", "catalog"], None)), 3);
    assert_eq!(code(&setcalc(&["--bogus", "catalog"], None)), 3);
    assert_eq!(code(&setcalc(&["--help"], None)), 0);
}

#[test]
fn unconverged_closure_exits_4_and_keeps_the_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let o = setcalc(&["--out", dir.path().to_str().unwrap(), "grad", "--mode", "closure", "sinlog"], None);
    assert_eq!(code(&o), 4);
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("diagnostic.json")).unwrap()).unwrap();
    assert_eq!(diag["diagnostic"]["converged"], false);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("setcalc.toml");
    fs::write(&cfg, "tol = 2.0\n[grid]\na = -1.0\nb = 1.0\nn = 51\n").unwrap();
    let from_file = setcalc(&["envelope", "--fn", "abs", "--k", "2"], Some(&cfg));
    assert_eq!(code(&from_file), 0);
    let text = stdout(&from_file);
    assert_eq!(data_rows(&text), 51);
    assert!(text.lines().next().unwrap().contains("tol_scale=2"));
    let flagged = setcalc(&["--n", "21", "--tol", "1", "envelope", "--fn", "abs", "--k", "2"], Some(&cfg));
    let text = stdout(&flagged);
    assert_eq!(data_rows(&text), 21);
    assert!(text.lines().next().unwrap().contains("tol_scale=1"));

    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(code(&setcalc(&["catalog"], Some(&cfg))), 3);
    assert_eq!(code(&setcalc(&["catalog"], Some(&dir.path().join("missing.toml")))), 3);
}

#[test]
fn verify_is_deterministic_under_a_seed() {
    let args = ["--n", "101", "--seed", "7", "--format", "json", "verify", "--suite", "core"];
    let (a, b) = (setcalc(&args, None), setcalc(&args, None));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["failed"], 0);
    let other = setcalc(&["--n", "101", "--seed", "8", "--format", "json", "verify", "--suite", "core"], None);
    assert_ne!(a.stdout, other.stdout);
}
