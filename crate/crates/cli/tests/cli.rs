use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bootperc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn bootperc")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a stored file; set `BOOTPERC_BLESS=1` to rewrite it.
fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var("BOOTPERC_BLESS").is_ok() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {name}");
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("bootperc-cli-{}-{name}", std::process::id()))
}

#[test]
fn exact_rows_sum_to_one() {
    let out = run(&["exact", "--n", "8", "--p", "0.3", "--a", "2", "--r", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# bootperc config: command=exact"));
    assert!(lines.next().unwrap().starts_with("# schema=1"));
    assert_eq!(lines.next(), Some("k,probability"));
    let total: f64 = lines.map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    check_golden("exact_n8.csv", &text);
}

#[test]
fn theory_boundary_mode() {
    let out = run(&["theory", "--r", "2", "--c", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value = |q: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{q},")))
            .unwrap_or_else(|| panic!("no {q} in output"))
            .parse()
            .unwrap()
    };
    assert_eq!(value("c_r"), 3.0);
    assert!((value("theta_cc") - (1.0 - std::f64::consts::E / 3.0)).abs() < 1e-12);
    check_golden("theory_c3.csv", &text);
}

#[test]
fn theory_thresholds_json() {
    let out = run(&["theory", "--n", "1e6", "--p", "2e-5", "--r", "2", "--format", "json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let get = |q: &str| -> f64 {
        v["rows"].as_array().unwrap().iter().find(|r| r["quantity"] == q).unwrap()["value"].as_f64().unwrap()
    };
    assert!((get("t_c") - 2500.0).abs() < 1e-6);
    assert!((get("a_c") - 1250.0).abs() < 1e-6);
    assert!(get("a_c_star") > 1000.0);
    assert_eq!(v["metadata"]["config"]["n"], "1e6");
    check_golden("theory_n1e6.json", &text);
}

#[test]
fn theory_needs_p_or_a() {
    let out = run(&["theory", "--n", "1000", "--r", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--n", "1e6", "--p", "2e-5", "--a", "2500", "--r", "2", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let row = text.lines().nth(3).unwrap();
    let final_size: usize = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(final_size > 990_000);
}

#[test]
fn simulate_golden_json() {
    let out = run(&["simulate", "--n", "2000", "--p", "0.005", "--a", "30", "--trials", "3", "--seed", "11", "--format", "json"]);
    assert!(out.status.success());
    check_golden("simulate_small.json", &stdout(&out));
}

#[test]
fn simulate_trajectory_rows() {
    let out = run(&["simulate", "--n", "500", "--p", "0.01", "--a", "5", "--seed", "3", "--trajectory"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(3).collect();
    assert!(rows.last().unwrap().starts_with("0,never,"));
    let total: usize = rows.iter().map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 495);
}

#[test]
fn workers_do_not_change_results() {
    let base = ["simulate", "--n", "3000", "--p", "0.003", "--a", "20", "--trials", "12", "--seed", "5"];
    let one = run(&[&base[..], &["--workers", "1"]].concat());
    let three = run(&[&base[..], &["--workers", "3"]].concat());
    let strip = |o: &Output| stdout(o).lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&one), strip(&three));
}

#[test]
fn config_echo_round_trips() {
    let out = run(&["sweep", "--n", "1000", "--p", "0.01", "--axis", "a", "--values", "2,10,40", "--trials", "30", "--seed", "9"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let path = temp_path("echo.cfg");
    std::fs::write(&path, text.lines().next().unwrap()).unwrap();
    let again = run(&["sweep", "--config", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(stdout(&again), text);
}

#[test]
fn config_file_with_overrides() {
    let path = temp_path("plain.cfg");
    std::fs::write(&path, "# small instance\nn = 8\np = 0.3\na = 2 # two seeds\nr=3\n").unwrap();
    let from_file = run(&["exact", "--config", path.to_str().unwrap(), "--r", "2"]);
    std::fs::remove_file(&path).ok();
    let direct = run(&["exact", "--n", "8", "--p", "0.3", "--a", "2", "--r", "2"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, direct.stdout);
}

#[test]
fn output_file() {
    let path = temp_path("out.csv");
    let out = run(&["exact", "--n", "6", "--p", "0.5", "--a", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.contains("k,probability"));
}

#[test]
fn sweep_rows_are_monotone_enough() {
    let out = run(&["sweep", "--n", "2000", "--p", "0.01", "--axis", "a", "--values", "1,5,20", "--trials", "200"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let probs: Vec<f64> = text.lines().skip(3).map(|l| l.split(',').nth(8).unwrap().parse().unwrap()).collect();
    assert_eq!(probs.len(), 3);
    assert!(probs[2] >= probs[0]);
}

#[test]
fn dyn_models() {
    let out = run(&["dyn", "--model", "activation", "--n", "50", "--p", "1", "--trials", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().skip(3).all(|l| l.split(',').nth(2) == Some("2")));
    let out = run(&["dyn", "--model", "edges", "--n", "200", "--a", "10", "--seed", "4"]);
    assert!(out.status.success());
    let out = run(&["dyn", "--model", "infection", "--n", "300", "--p", "0.02", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"][0]["model"], "infection");
    assert_eq!(run(&["dyn", "--model", "edges", "--n", "200", "--p", "0.1", "--a", "3"]).status.code(), Some(1));
    assert_eq!(run(&["dyn", "--n", "200", "--a", "3"]).status.code(), Some(1));
}

#[test]
fn usage_and_runtime_exit_codes() {
    assert_eq!(run(&["simulate", "--n", "100", "--p", "0.1", "--a", "101"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--n", "1.5", "--p", "0.1", "--a", "1"]).status.code(), Some(1));
    assert_eq!(run(&["exact", "--n", "8", "--p", "0.3", "--a", "2", "--axis", "a"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["exact", "--n", "500", "--p", "0.3", "--a", "2"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_subset() {
    let out = run(&["validate", "--only", "2,18", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["passed"] == true));
    assert_eq!(v["metadata"]["failed"], 0);
}
