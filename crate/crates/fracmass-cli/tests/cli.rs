use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fracmass(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmass")).args(args).current_dir(dir).env_remove("FRACMASS_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Every object with a `value` also carries `error` and `error_kind`.
fn assert_numbers_carry_errors(v: &Value) {
    match v {
        Value::Object(m) => {
            if m.contains_key("value") && m["value"].is_number() {
                assert!(m.contains_key("error") && m.contains_key("error_kind"), "bare value in {v}");
            }
            m.values().for_each(assert_numbers_carry_errors);
        }
        Value::Array(a) => a.iter().for_each(assert_numbers_carry_errors),
        _ => {}
    }
}

const CONSTANT_ALPHA: &str = r#"
# alpha_2 of the constant one on the line
command = "sweep"
quantity = "alpha"
dim = 1
p = 2
field = { constant = 1.0 }
"#;

const HALF_PLANE: &str = r#"
dim = 2
s = 0.2
field = { indicator = { half_space = { normal = [1.0, 0.0], offset = 0.0 } } }
set = { half_space = { normal = [1.0, 0.0], offset = 0.0 } }
omega = { ball = { center = [0.0, 0.0], radius = 1.0 } }

[quadrature]
sample_budget = 20000
rng_seed = 11
"#;

#[test]
fn s_out_of_range_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &HALF_PLANE.replace("s = 0.2", "s = 1.5"));
    let out = fracmass(&["seminorm", "-c", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s out of (0,1)"));
}

#[test]
fn schema_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"dim": 2, "omega": {"ball": {"center": [0, 0], "radius": 1, "colour": 1}}}"#);
    let out = fracmass(&["limit", "-c", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("omega.ball") && err.contains("colour"), "{err}");
}

#[test]
fn run_needs_a_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HALF_PLANE);
    assert_eq!(fracmass(&["run", "-c", &cfg], dir.path()).status.code(), Some(1));
}

#[test]
fn constant_sweep_extrapolates_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", CONSTANT_ALPHA);
    let out = fracmass(&["run", "-c", &cfg, "--csv", "a.csv", "--json", "a.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("s,value,error,error_kind"));
    assert_eq!(csv.lines().count(), 8);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    let limit = report["results"]["sweep"]["limit"]["value"].as_f64().unwrap();
    assert!((limit - 1.0).abs() < 1e-9, "{limit}");
    assert_eq!(report["inputs"]["p"], 2);
    assert_numbers_carry_errors(&report);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HALF_PLANE);
    let args = ["sweep", "-c", &cfg, "--quantity", "perimeter", "--s-grid", "0.1,0.03,0.01,0.003,0.001", "--csv", "a.csv", "--json", "a.json"];
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = fracmass(&args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push((read("a.csv"), read("a.json")));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn every_command_reports_errors_with_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HALF_PLANE);
    for cmd in ["seminorm", "perimeter", "limit", "hardy", "gauss"] {
        let extra: &[&str] = if cmd == "hardy" { &["--s", "0.01"] } else { &[] };
        let mut args = vec![cmd, "-c", &cfg];
        args.extend_from_slice(extra);
        let out = fracmass(&args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["command"], cmd);
        assert_numbers_carry_errors(&report["results"]);
    }
}

#[test]
fn limit_of_a_half_disk_is_half_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HALF_PLANE);
    let out = fracmass(&["limit", "-c", &cfg], dir.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let v = report["results"]["f0_binomial"]["value"].as_f64().unwrap();
    assert!((v - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-8, "{v}");
}

#[test]
fn csv_needs_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HALF_PLANE);
    assert_eq!(fracmass(&["limit", "-c", &cfg, "--csv", "x.csv"], dir.path()).status.code(), Some(1));
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracmass(&["verify", "--only", "1,2,3", "--json", "v.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    assert!(text.contains("acceptance: 3 passed, 0 failed"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], 3);
    assert_eq!(fracmass(&["verify", "--only", "15"], dir.path()).status.code(), Some(1));
}

#[test]
fn thread_variable_must_be_a_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fracmass"))
        .args(["verify", "--only", "1"])
        .env("FRACMASS_THREADS", "many")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
