use std::path::Path;
use std::process::{Command, Output};

fn msfuzzy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msfuzzy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&msfuzzy(&["--help"])), 0);
    assert_eq!(code(&msfuzzy(&["simulate", "--bogus"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(code(&msfuzzy(&["simulate", "--dgp", "MS9--1", "--out", path_str(&out)])), 1);
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&msfuzzy(&["fuzzy", "--input", path_str(&missing), "--k", "2"])), 2);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,y\n2000,1.0\n2001,abc\n").unwrap();
    let o = msfuzzy(&["fuzzy", "--input", path_str(&bad), "--k", "2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn simulate_then_fuzzy_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.csv");
    let o = msfuzzy(&["simulate", "--dgp", "MS2--4", "--T", "150", "--seed", "3", "--out", path_str(&sim)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&sim).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y,state"));
    assert_eq!(lines.count(), 150);

    // the same seed reproduces the file
    let again = dir.path().join("again.csv");
    msfuzzy(&["simulate", "--dgp", "MS2--4", "--T", "150", "--seed", "3", "--out", path_str(&again)]);
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());

    let o = msfuzzy(&["fuzzy", "--input", path_str(&sim), "--column", "y", "--k", "2"]);
    assert_eq!(code(&o), 0);
    let memb = String::from_utf8(o.stdout).unwrap();
    assert_eq!(memb.lines().count(), 151);

    let cfg = dir.path().join("est.toml");
    std::fs::write(&cfg, "n_restarts = 3\nseed = 11\n").unwrap();
    let smooth = dir.path().join("smooth.csv");
    let o = msfuzzy(&[
        "estimate", "--input", path_str(&sim), "--column", "y", "--k", "2",
        "--config", path_str(&cfg), "--se", "--out", path_str(&smooth),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("mu_1") && report.contains("AIC") && report.contains("duration_2"));
    assert!(report.contains('('), "standard errors requested");
    let paths = std::fs::read_to_string(&smooth).unwrap();
    assert!(paths.starts_with("t,label,y,p1,p2,state"));

    std::fs::write(&cfg, "restarts = 3\n").unwrap();
    let o = msfuzzy(&["estimate", "--input", path_str(&sim), "--column", "y", "--k", "2", "--config", path_str(&cfg)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn select_k_reports_every_index() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.csv");
    msfuzzy(&["simulate", "--dgp", "MS3--8", "--T", "120", "--seed", "1", "--out", path_str(&sim)]);
    let o = msfuzzy(&["select-k", "--input", path_str(&sim), "--column", "y", "--kmax", "4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,PC,PE,MPC,ASW,ASWF,XB");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("selected,"));
}

#[test]
fn density_and_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = msfuzzy(&["density", "--dgp", "MS3AR--2", "--out", path_str(&out), "--points", "101"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("x,density"));
    assert_eq!(text.lines().count(), 102);

    let o = msfuzzy(&["catalog"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("MS2--1") && text.contains("MS3AR--8"));
}

#[test]
fn small_monte_carlo_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = msfuzzy(&[
        "montecarlo", "--dgps", "MS2--8", "--reps", "3", "--T", "60", "--seed", "2",
        "--out", path_str(dir.path()), "--restarts", "2", "--kmax", "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["rand_summary.csv", "success_rates.csv", "selected_k_histogram.csv", "replications.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
