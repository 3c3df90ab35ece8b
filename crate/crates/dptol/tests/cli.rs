use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn dptol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dptol"))
        .args(args)
        .env_remove("DPTOL_THREADS")
        .output()
        .expect("run dptol")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn potency_file(dir: &Path) -> String {
    let p = dir.join("potency.txt");
    std::fs::write(&p, dptol::dataset::POTENCY_TXT).unwrap();
    p.to_string_lossy().into_owned()
}

fn limits(text: &str) -> (f64, f64) {
    let line = text.lines().find(|l| l.starts_with("limits:")).expect("limits line");
    let inner = line.trim_start_matches("limits: [").trim_end_matches(']');
    let (a, b) = inner.split_once(", ").unwrap();
    (a.parse().unwrap(), b.parse().unwrap())
}

#[test]
fn fit_potency_bg() {
    let dir = tempfile::tempdir().unwrap();
    let f = potency_file(dir.path());
    let o = dptol(&[
        "fit", &f, "--method", "dp", "--a", "1", "--base", "normal:100,3.3", "--kind", "bg", "--beta", "0.95",
        "--gamma", "0.95", "--side", "two",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (lo, hi) = limits(&stdout(&o));
    assert!((lo - 92.58).abs() < 0.5 && (hi - 107.88).abs() < 0.5, "{lo} {hi}");
    let out = stdout(&o);
    assert!(out.contains("achieved_level:"));
    assert!(out.contains("flags:"));
    // manifest goes to stderr without --out
    assert!(stderr(&o).contains("\"command\": \"fit\""));
}

#[test]
fn fit_potency_expectation_a0_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = potency_file(dir.path());
    let report = dir.path().join("r.json");
    let o = dptol(&[
        "fit",
        &f,
        "--kind",
        "expectation",
        "--a",
        "0",
        "--base",
        "normal:100,1",
        "--beta",
        "0.95",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (lo, hi) = limits(&stdout(&o));
    assert!((lo - 93.3948).abs() < 0.01 && (hi - 107.4120).abs() < 0.01);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!((r["lower"].as_f64().unwrap() - lo).abs() < 1e-4);
    assert_eq!(r["n"], 25);
}

#[test]
fn csv_column_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    let mut s = String::from("batch,value\n");
    for (i, v) in dptol::dataset::POTENCY.iter().enumerate() {
        s.push_str(&format!("b{i},{v}\n"));
    }
    std::fs::write(&p, s).unwrap();
    let o = dptol(&[
        "fit",
        p.to_str().unwrap(),
        "--column",
        "value",
        "--kind",
        "expectation",
        "--a",
        "0",
        "--base",
        "normal:0,1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((limits(&stdout(&o)).0 - 93.3948).abs() < 0.01);
}

#[test]
fn empty_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.txt");
    std::fs::write(&p, "").unwrap();
    let o = dptol(&["fit", p.to_str().unwrap(), "--a", "1", "--base", "normal:0,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no values"));
}

#[test]
fn bad_number_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    std::fs::write(&p, "1.0\n2.0\nx3\n").unwrap();
    let o = dptol(&["fit", p.to_str().unwrap(), "--a", "1", "--base", "normal:0,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"));
}

#[test]
fn infeasible_wilks_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("small.txt");
    std::fs::write(&p, (1..=20).map(|i| format!("{i}\n")).collect::<String>()).unwrap();
    let o = dptol(&["fit", p.to_str().unwrap(), "--method", "wilks", "--side", "upper"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("limits: [-inf, 20.0000]"));
    assert!(stderr(&o).contains("not attainable"));
}

#[test]
fn bad_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(
        &p,
        r#"
dgp = "normal:0,1"
n_values = [10]
replications = 0
[spec]
kind = "bg"
side = "sideways"
beta = 0.9
[method]
type = "dp"
schedule = "cubic"
c = 1.0
base = "normal:0,1"
"#,
    )
    .unwrap();
    let o = dptol(&["simulate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("method.schedule"), "{e}");
    assert!(e.contains("spec.side"), "{e}");
    assert!(e.contains("replications"), "{e}");
}

#[test]
fn smoke_config_is_fast() {
    let t = Instant::now();
    let o = dptol(&["simulate", configs().join("smoke.toml").to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn simulate_writes_manifest_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = dptol(&[
        "--threads",
        "2",
        "simulate",
        configs().join("smoke.toml").to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let man = dir.path().join("t.csv.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&man).unwrap()).unwrap();
    assert_eq!(m["tool"], "dptol");
    assert_eq!(m["command"]["command"], "simulate");
    assert_eq!(m["seed"], 0);
    let replay = dptol(&["replay", man.to_str().unwrap()]);
    assert_eq!(replay.stdout, std::fs::read(&out).unwrap());
}

#[test]
fn replay_detects_changed_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = potency_file(dir.path());
    let man = dir.path().join("m.json");
    let o = dptol(&["fit", &f, "--a", "1", "--base", "normal:100,5", "--manifest", man.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = dptol(&["replay", man.to_str().unwrap()]);
    assert_eq!(r.stdout, o.stdout);
    std::fs::write(&f, "1\n2\n3\n").unwrap();
    let r = dptol(&["replay", man.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("input file changed"));
}

#[test]
fn potency_report() {
    let o = dptol(&["potency"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let exp = s.split("beta-expectation").nth(1).unwrap();
    assert!(!exp.contains("OUTSIDE"));
    assert!(s.contains("not computed by this tool"));
    assert!(!s.contains("| HE"));
    let j = dptol(&["potency", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["expectation_rows"].as_array().unwrap().len(), 11);
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(dptol(&["fit", "x", "--nope"]).status.code(), Some(2));
    assert_eq!(dptol(&["--help"]).status.code(), Some(0));
}
