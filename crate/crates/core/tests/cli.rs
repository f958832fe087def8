use std::path::Path;
use std::process::{Command, Output};

use peg_nexus::report::PLOT_FILES;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peg-nexus"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let sim = run(dir.path(), &["simulate", "--scenario", "genius-2025", "--seed", "42", "--out", "data.csv"]);
    assert_eq!(sim.status.code(), Some(0), "{}", stderr(&sim));
    let rep = run(
        dir.path(),
        &["report", "--in", "data.csv", "--seed", "7", "--out", "report.json", "--plots", "plots"],
    );
    assert_eq!(rep.status.code(), Some(0), "{}", stderr(&rep));
    for f in PLOT_FILES {
        assert!(dir.path().join("plots").join(f).is_file(), "{f} missing");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["settings"]["seed"], 7);
    assert_eq!(report["input_summary"]["n"], 1000);
}

#[test]
fn simulate_is_reproducible_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    for (out, seed) in [("a.csv", "5"), ("b.csv", "5"), ("c.csv", "6")] {
        let o = run(dir.path(), &["simulate", "--scenario", "treasury-2024", "--seed", seed, "--out", out]);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn scenario_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/treasury-2024.json");
    let o = run(dir.path(), &["simulate", "--scenario", path.to_str().unwrap(), "--out", "t.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let builtin = run(dir.path(), &["simulate", "--scenario", "treasury-2024", "--out", "u.csv"]);
    assert_eq!(builtin.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("t.csv")).unwrap(),
        std::fs::read(dir.path().join("u.csv")).unwrap()
    );
}

#[test]
fn short_input_is_a_data_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("date,peg,green\n");
    for d in 1..=10 {
        csv.push_str(&format!("2025-06-{d:02},1,{}\n", 100 + d));
    }
    std::fs::write(dir.path().join("short.csv"), csv).unwrap();
    let o = run(dir.path(), &["report", "--in", "short.csv", "--out", "r.json", "--plots", "plots"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("insufficient data"), "{}", stderr(&o));
    assert!(!dir.path().join("r.json").exists());
    assert!(!dir.path().join("plots").exists());
}

#[test]
fn malformed_input_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("dup.csv"), "date,peg,green\n2025-06-01,1,100\n2025-06-01,1,100\n").unwrap();
    let o = run(dir.path(), &["fit", "--in", "dup.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let missing = run(dir.path(), &["fit", "--in", "nope.csv"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 6] = [
        &["bogus"],
        &["report"],
        &["report", "--in", "a.csv", "--scenario", "genius-2025"],
        &["tail", "--scenario", "genius-2025", "--confidence", "0.5"],
        &["forecast", "--scenario", "genius-2025", "--paths", "10"],
        &["fit", "--scenario", "genius-2025", "--lags", "0"],
    ];
    for args in cases {
        assert_eq!(run(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_scenario_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--scenario", "nope", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown scenario"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn subcommands_emit_json() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["fit", "--scenario", "genius-2025"], "vecm"),
        (&["irf", "--scenario", "genius-2025", "--horizon", "30"], "half_life"),
        (&["fevd", "--scenario", "genius-2025"], "share_green"),
        (&["forecast", "--scenario", "genius-2025", "--paths", "2000", "--threshold", "0.99"], "prob_below"),
        (&["tail", "--scenario", "genius-2025", "--confidence", "0.95"], "tail_ratio"),
        (&["diagnose", "--scenario", "genius-2025", "--break-date", "2026-08-28"], "variance_break"),
    ];
    for (args, key) in cases {
        let o = run(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        let found = v.get(key).is_some() || v.get("diagnostics").is_some_and(|d| d.get(key).is_some());
        assert!(found, "{args:?} lacks {key}");
    }
    let o = run(dir.path(), &["irf", "--scenario", "genius-2025", "--horizon", "30"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["horizons"].as_array().unwrap().len(), 31);
}
