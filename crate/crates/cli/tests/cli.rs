//! The binary end to end: exit codes, artifacts and seeded reruns.

use std::path::Path;
use std::process::{Command, Output};

fn driftwalk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftwalk")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const RETURNS: &str = "seed = 3\n\n[chain]\nincrements = [-2.0, 1.0]\nx0 = 20.0\nr0 = 0.0\n\n[grid]\ntrials = 20000\nhorizon = 5000\nprobes = [20.0]\n";

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftwalk(&["returns"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    let cfg = write(dir.path(), "c.toml", "[chain]\nx0 = 4.0\n");
    let out = driftwalk(&["--config", &cfg, "returns"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing key `seed`"));
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\n\n[chain]\nwobble = 3\n");
    let out = driftwalk(&["--config", &cfg, "returns"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("wobble"), "{err}");
}

#[test]
fn missing_measure_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\n\n[walk]\nmeasure = \"nowhere.csv\"\n");
    let out = driftwalk(&["--config", &cfg, "lyapunov"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn returns_run_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", RETURNS);
    let a = driftwalk(&["--config", &cfg, "--out", "a", "returns"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = driftwalk(&["--config", &cfg, "--out", "b", "returns"], dir.path());
    assert_eq!(b.status.code(), Some(0));
    let read = |d: &str, f: &str| std::fs::read_to_string(dir.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "returns.csv"), read("b", "returns.csv"));
    assert!(read("a", "returns.csv").starts_with("# driftwalk "));
    assert!(String::from_utf8_lossy(&a.stdout).contains("check foster = pass"));

    // --seed overrides the config and changes the draws
    let c = driftwalk(&["--config", &cfg, "--seed", "4", "--out", "c", "returns"], dir.path());
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(read("a", "returns.csv"), read("c", "returns.csv"));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // no recurrent walk spends all but 1e-9 of its time at 0
    let cfg = write(
        dir.path(),
        "c.toml",
        "seed = 2\n\n[chain]\nincrements = [-2.0, 1.0]\nx0 = 40.0\nsteps = 50000\n\n[grid]\nr = [0.0]\nalpha = 1e-9\n",
    );
    let out = driftwalk(&["--config", &cfg, "occupation"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("result = fail"));
}

#[test]
fn default_output_directory_is_named_after_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftwalk(&["--seed", "5", "counterexample", "empirical"], dir.path());
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/counterexample-empirical/empirical.csv").exists());
    assert!(dir.path().join("out/counterexample-empirical/summary.txt").exists());
}

#[test]
fn module_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 2\n\n[chain]\nincrements = [-1.0, 1.0]\nweights = [0.45, 0.55]\n");
    let out = driftwalk(&["--config", &cfg, "returns"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not negative"));
}
