//! End-to-end tests of the `wfpc` binary: flag handling, CSV schemas,
//! config layering, determinism of seeded outputs, and error exits.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wfpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfpc"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout_of(args: &[&str]) -> String {
    let out = wfpc(args);
    assert!(
        out.status.success(),
        "wfpc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is utf-8")
}

/// Parse a CSV body (header line first) into rows of f64-able fields.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|line| line.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn power_fair_scheme_matches_weights() {
    let out = stdout_of(&[
        "power", "--zipf-s", "1", "--n", "2", "--f", "id", "--g", "const", "--k", "5",
        "--method", "exact",
    ]);
    assert!(out.starts_with("rank,weight,voting_power,std_err\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    let p1: f64 = rows[0][2].parse().unwrap();
    let p2: f64 = rows[1][2].parse().unwrap();
    assert!((p1 - 2.0 / 3.0).abs() < 1e-9, "{p1}");
    assert!((p2 - 1.0 / 3.0).abs() < 1e-9, "{p2}");
    assert_eq!(rows[0][3], "0");
}

#[test]
fn power_single_node_has_unit_power() {
    let out = stdout_of(&["power", "--n", "1", "--k", "3"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    let p: f64 = rows[0][2].parse().unwrap();
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn power_uniform_sampling_weighted_opinions() {
    let out = stdout_of(&[
        "power", "--zipf-s", "1", "--n", "2", "--f", "const", "--g", "id", "--k", "2",
    ]);
    let rows = csv_rows(&out);
    let p1: f64 = rows[0][2].parse().unwrap();
    assert!((p1 - 7.0 / 12.0).abs() < 1e-12, "{p1}");
}

#[test]
fn power_monte_carlo_is_deterministic() {
    let args = [
        "power", "--zipf-s", "1", "--n", "4", "--k", "5", "--method", "mc", "--samples",
        "20000", "--seed", "99",
    ];
    let first = stdout_of(&args);
    let second = stdout_of(&args);
    assert_eq!(first, second);
    let rows = csv_rows(&first);
    let se: f64 = rows[0][3].parse().unwrap();
    assert!(se > 0.0);
}

#[test]
fn power_oversized_enumeration_suggests_mc() {
    let out = wfpc(&["power", "--zipf-s", "1", "--n", "200", "--k", "50"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mc"), "stderr was: {err}");
}

#[test]
fn fairness_fair_scheme_has_zero_gaps() {
    let out = stdout_of(&["fairness", "--zipf-s", "1", "--n", "3", "--k", "3", "--node", "0"]);
    assert!(out.starts_with("x,v_original,v_split_sum,gap\n"));
    let rows = csv_rows(&out);
    // Default split ratios.
    assert_eq!(rows.len(), 3);
    for row in rows {
        let gap: f64 = row[3].parse().unwrap();
        assert!(gap.abs() <= 1e-12, "gap {gap}");
    }
}

#[test]
fn fairness_uniform_sampling_split_gains_power() {
    let out = stdout_of(&[
        "fairness", "--zipf-s", "1", "--n", "2", "--f", "const", "--g", "id", "--k", "2",
        "--node", "0", "--split-ratios", "0.5",
    ]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    let gap: f64 = rows[0][3].parse().unwrap();
    assert!((gap - (-1.0 / 12.0)).abs() < 1e-12, "gap {gap}");
}

#[test]
fn simulate_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        stdout_of(&[
            "simulate", "--n", "40", "--reps", "10", "--seed", "5", "--out",
            out.to_str().unwrap(),
        ]);
    }
    for name in ["repetitions.csv", "summary.csv", "telemetry.csv", "config.txt"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let reps = fs::read_to_string(out_a.join("repetitions.csv")).unwrap();
    assert!(reps.starts_with("rep,seed,agreement_failure,all_finalized,rounds\n"));
    assert_eq!(reps.lines().count(), 11);
    let summary = fs::read_to_string(out_a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("repetitions,failures,failure_rate,ci_low,ci_high,mean_rounds\n"));
    let config = fs::read_to_string(out_a.join("config.txt")).unwrap();
    assert!(config.starts_with("command = simulate\n"));
    assert!(config.contains("tau = 0.66"));
    assert!(config.contains("seed = 5"));
}

#[test]
fn simulate_skips_telemetry_with_adversary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("adv");
    stdout_of(&[
        "simulate", "--n", "40", "--q", "0.25", "--reps", "5", "--seed", "5", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(out.join("summary.csv").exists());
    assert!(!out.join("telemetry.csv").exists());
}

#[test]
fn sweep_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        stdout_of(&[
            "sweep", "--axis", "k", "--values", "10,5", "--n", "40", "--q", "0.25",
            "--reps", "10", "--seed", "7", "--out", out.to_str().unwrap(),
        ]);
    }
    let csv_a = fs::read_to_string(out_a.join("sweep.csv")).unwrap();
    let csv_b = fs::read_to_string(out_b.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(csv_a.starts_with(
        "axis_value,repetitions,failures,failure_rate,ci_low,ci_high,mean_rounds\n"
    ));
    // Rows come back sorted by axis value regardless of flag order.
    let rows = csv_rows(&csv_a);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "5");
    assert_eq!(rows[1][0], "10");
    let config = fs::read_to_string(out_a.join("config.txt")).unwrap();
    assert!(config.contains("axis = k"));
    assert!(config.contains("values = 10,5"));
}

#[test]
fn complexity_analytic_profile() {
    let out = stdout_of(&["complexity", "--n", "4", "--s", "1", "--k", "1"]);
    assert!(out.contains("fair gossip threshold rank: 2"));
    assert!(out.contains("1,1.92,,\n"), "output was: {out}");
}

#[test]
fn complexity_with_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cx");
    let out = stdout_of(&[
        "complexity", "--n", "50", "--s", "1", "--k", "10", "--rounds", "200", "--seed",
        "7", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.contains("max_rel_error"));
    assert!(out.contains("goodness-of-fit"));
    let csv = fs::read_to_string(out_dir.join("complexity.csv")).unwrap();
    assert!(csv.starts_with("rank,expected,observed_mean,rel_error\n"));
    assert_eq!(csv.lines().count(), 51);
    // Telemetry columns are populated in this mode.
    assert!(!csv_rows(&csv)[0][2].is_empty());
}

#[test]
fn fit_zipf_recovers_exact_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("values.txt");
    let values: Vec<String> = (1..=50).map(|r| (1.0 / r as f64).to_string()).collect();
    fs::write(&input, values.join("\n")).unwrap();
    let out_dir = dir.path().join("fit");
    let out = stdout_of(&[
        "fit-zipf", "--input", input.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
    ]);
    let s_line = out.lines().find(|l| l.starts_with("s = ")).unwrap();
    let s: f64 = s_line.trim_start_matches("s = ").parse().unwrap();
    assert!((s - 1.0).abs() < 1e-9, "{s}");
    let csv = fs::read_to_string(out_dir.join("fit.csv")).unwrap();
    assert!(csv.starts_with("s,c,r_squared,points\n"));
}

#[test]
fn fit_zipf_missing_file_fails_cleanly() {
    let out = wfpc(&["fit-zipf", "--input", "/definitely/not/here.txt"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: "), "stderr was: {err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "n = 2\nzipf-s = 1\nk = 5\n").unwrap();
    let from_config = stdout_of(&["power", "--config", config.to_str().unwrap()]);
    assert_eq!(csv_rows(&from_config).len(), 2);
    // An explicit flag beats the config entry.
    let overridden = stdout_of(&[
        "power", "--config", config.to_str().unwrap(), "--n", "3",
    ]);
    assert_eq!(csv_rows(&overridden).len(), 3);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    stdout_of(&[
        "sweep", "--axis", "q", "--values", "0.1,0.2", "--n", "30", "--reps", "5",
        "--seed", "3", "--out", out_a.to_str().unwrap(),
    ]);
    // Strip the command line and feed the echo back as a config file.
    let echo = fs::read_to_string(out_a.join("config.txt")).unwrap();
    let rerun_conf = dir.path().join("rerun.conf");
    let body: String = echo
        .lines()
        .filter(|l| !l.starts_with("command = "))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&rerun_conf, body).unwrap();
    let out_b = dir.path().join("b");
    stdout_of(&[
        "sweep", "--config", rerun_conf.to_str().unwrap(), "--out", out_b.to_str().unwrap(),
    ]);
    let a = fs::read_to_string(out_a.join("sweep.csv")).unwrap();
    let b = fs::read_to_string(out_b.join("sweep.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn help_lists_defaults() {
    let out = stdout_of(&["simulate", "--help"]);
    for needle in [
        "[default: 0.66]",
        "[default: 0.3]",
        "[default: 10]",
        "[default: 50]",
        "[default: 20]",
    ] {
        assert!(out.contains(needle), "help is missing `{needle}`:\n{out}");
    }
}

#[test]
fn atomic_outputs_leave_no_temp_files(){
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("clean");
    stdout_of(&[
        "simulate", "--n", "30", "--reps", "5", "--seed", "2", "--out", out.to_str().unwrap(),
    ]);
    let leftovers: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|name| name.ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty(), "temp files left behind: {leftovers:?}");
    assert!(Path::new(&out).join("config.txt").exists());
}
