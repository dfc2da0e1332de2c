//! End-to-end checks of the binary: subcommand flows, exit codes, and
//! output file shapes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treequad"))
}

#[test]
fn run_then_summarize_reproduces_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "run", "--problem", "camel", "--dims", "1", "--methods", "smc,is", "--budget",
            "500", "--replicates", "4", "--seed", "7", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let first = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();

    let redo = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["summarize", "--input"])
        .arg(dir.path().join("runs.csv"))
        .arg("--out")
        .arg(redo.path())
        .status()
        .unwrap();
    assert!(status.success());
    let second = std::fs::read_to_string(redo.path().join("summary.csv")).unwrap();
    assert_eq!(first, second);

    // Independent recomputation of one summary cell from the raw CSV.
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    let mut smc_errors: Vec<f64> = runs
        .lines()
        .skip(1)
        .map(|line| line.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == "smc")
        .map(|f| f[8].parse::<f64>().unwrap())
        .collect();
    smc_errors.sort_by(f64::total_cmp);
    let median = 0.5 * (smc_errors[1] + smc_errors[2]);
    let mean = smc_errors.iter().sum::<f64>() / 4.0;
    let stdev =
        (smc_errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / 3.0).sqrt();
    let cell = first
        .lines()
        .find(|l| l.starts_with("camel,smc"))
        .expect("smc summary row");
    let fields: Vec<&str> = cell.split(',').collect();
    assert!((fields[5].parse::<f64>().unwrap() - median).abs() <= 1e-12 * median.abs().max(1.0));
    assert!((fields[6].parse::<f64>().unwrap() - stdev).abs() <= 1e-12 * stdev.abs().max(1.0));
}

#[test]
fn config_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "run", "--problem", "nonesuch", "--dims", "1", "--methods", "smc", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let status = bin()
        .args([
            "run", "--problem", "camel", "--dims", "0", "--methods", "smc", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Unknown method names are rejected at argument parsing.
    let status = bin()
        .args([
            "run", "--problem", "camel", "--dims", "1", "--methods", "bogus", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn strict_mode_exits_with_code_two_on_failed_runs() {
    let dir = tempfile::tempdir().unwrap();
    // A zero metropolis step makes every tree run fail while smc runs
    // succeed; strict mode must still exit 2.
    let status = bin()
        .args([
            "run",
            "--problem",
            "camel",
            "--dims",
            "1",
            "--methods",
            "tq-s",
            "--sampler",
            "metropolis",
            "--metropolis-step",
            "0",
            "--budget",
            "200",
            "--strict",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(runs.contains("failed:"));
}

#[test]
fn diagnose_writes_the_three_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "diagnose",
            "--problem",
            "camel",
            "--dim",
            "2",
            "--method",
            "tq-s",
            "--budget",
            "2000",
            "--seed",
            "5",
            "--diag-samples",
            "2000",
            "--surrogate-samples",
            "1000",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let removal = std::fs::read_to_string(dir.path().join("removal_curve.csv")).unwrap();
    assert!(removal.starts_with("i,z_i,retained_fraction\n"));
    let cumulative = std::fs::read_to_string(dir.path().join("cumulative_curve.csv")).unwrap();
    assert!(cumulative.starts_with("k,cumulative\n"));
    let surrogate = std::fs::read_to_string(dir.path().join("surrogate_samples.csv")).unwrap();
    assert!(surrogate.starts_with("x0,x1,leaf_id\n"));
    assert_eq!(surrogate.lines().count(), 1001);
}

#[test]
fn diagnose_rejects_non_tree_methods() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "diagnose", "--problem", "camel", "--dim", "1", "--method", "smc", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
