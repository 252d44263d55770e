use std::path::Path;
use std::process::{Command, Output};

use pselect::sim::output::write_experiment_files;
use pselect::sim::{run_experiment, ErrorFamily, ExperimentConfig};

fn pselect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pselect"))
        .args(args)
        .env_remove("PSELECT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn infer_orthonormal_toy() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", "x1,x2,y\n1,0,2\n0,1,1\n");
    let out_dir = dir.path().join("res");
    let out = pselect(&[
        "infer", "--data", &data, "--response", "y", "--method", "lar", "-k", "1", "--sigma", "known:1",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&out_dir.join("inference.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..4], ["1", "0", "x1", "+"]);
    let p: f64 = rows[0][7].parse().unwrap();
    assert!((p - 0.14339).abs() < 5e-5, "{p}");
}

#[test]
fn infer_far_from_truncation_gives_z_interval() {
    // One unit-norm-direction predictor with v^T y = 50: the sign constraint
    // at 0 is 50 standard deviations away, so the interval is 50 ± z_0.95.
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "far.csv", "x,y\n1,25\n1,25\n1,25\n1,25\n");
    let out = pselect(&["infer", "--data", &data, "--response", "y", "--method", "fs", "--alpha", "0.1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let (lo, hi): (f64, f64) = (row[8].parse().unwrap(), row[9].parse().unwrap());
    assert!((lo - (50.0 - 1.6449)).abs() < 1e-3 && (hi - (50.0 + 1.6449)).abs() < 1e-3, "{lo} {hi}");
}

#[test]
fn infer_sigma_modes() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("a,b,c,y\n");
    for i in 0..30 {
        let t = i as f64;
        text += &format!("{},{},{},{}\n", (t * 0.37).sin(), (t * 1.3).cos(), t % 4.0, 2.0 * (t * 0.37).sin() + (t * 2.9).sin());
    }
    let data = write(dir.path(), "d.csv", &text);
    for sigma in ["plugin", "bootstrap"] {
        let out = pselect(&["infer", "--data", &data, "--response", "y", "-k", "2", "--sigma", sigma]);
        assert!(out.status.success(), "{sigma}: {}", stderr(&out));
        assert_eq!(stdout(&out).lines().count(), 3);
    }
    let a = pselect(&["infer", "--data", &data, "--response", "3", "-k", "2", "--sigma", "bootstrap", "--seed", "4"]);
    let b = pselect(&["infer", "--data", &data, "--response", "y", "-k", "2", "--sigma", "bootstrap", "--seed", "4"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "toy.csv", "x1,x2,y\n1,0,2\n0,1,1\n");
    let out = pselect(&["infer", "--data", &data, "--response", "income"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("income"));

    for args in [
        vec!["infer", "--data", &data, "--response", "y", "--gamma", "0.1"],
        vec!["infer", "--data", &data, "--response", "y", "--sigma", "known:-1"],
        vec!["infer", "--data", "/nonexistent.csv", "--response", "y"],
        vec!["simulate", "everything"],
        vec!["simulate", "null", "--dist", "cauchy"],
        vec!["manymeans", "--m", "0", "--reps", "3"],
        vec!["report", dir.path().to_str().unwrap()],
    ] {
        let out = pselect(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn numerical_failure_exits_1() {
    // Two identical columns: the second step has no admissible candidate.
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "dup.csv", "a,b,y\n1,1,1\n2,2,0\n3,3,4\n");
    let out = pselect(&["infer", "--data", &data, "--response", "y", "-k", "2"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn simulate_null_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = pselect(&["simulate", "null", "--dist", "laplace", "--reps", "500", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("pvalues.csv"));
    assert_eq!(rows.len(), 500 * 3);
    assert!(rows.iter().all(|r| r[0] == "laplace" && r[2] == "1"));
    assert_eq!(csv_rows(&dir.path().join("intervals.csv")).len(), 500 * 3);
}

#[test]
fn simulate_signal_summary_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let run = |out: &Path, threads: &str| {
        let o = pselect(&[
            "simulate", "signal", "--reps", "20", "--alpha", "0.1", "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run(&a, "1");
    run(&b, "3");
    assert_eq!(csv_rows(&a.join("summary.csv")).len(), 4 * 3 * 3);
    for f in ["pvalues.csv", "intervals.csv", "summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let (cli_dir, lib_dir) = (dir.path().join("cli"), dir.path().join("lib"));
    let out = pselect(&["simulate", "null", "--dist", "uniform", "--reps", "40", "--seed", "5", "--out", cli_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cfg = ExperimentConfig {
        reps: 40,
        seed: 5,
        families: vec![ErrorFamily::Uniform],
        ..ExperimentConfig::null()
    };
    write_experiment_files(&lib_dir, &run_experiment(&cfg).unwrap()).unwrap();
    for f in ["pvalues.csv", "intervals.csv", "summary.csv"] {
        assert_eq!(std::fs::read(cli_dir.join(f)).unwrap(), std::fs::read(lib_dir.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# small run\nreps = 7\ndist = normal\nmax_resamples = 2000\n");
    let out_dir = dir.path().join("o");
    let out = pselect(&["--config", &cfg, "simulate", "null", "--reps", "9", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&out_dir.join("pvalues.csv"));
    assert_eq!(rows.len(), 9 * 3);
    assert!(rows.iter().all(|r| r[0] == "normal"));

    let bad = write(dir.path(), "bad.cfg", "colour = blue\n");
    let out = pselect(&["--config", &bad, "simulate", "null"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manymeans_reports_zero_fraction_and_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = pselect(&["manymeans", "--d", "50000", "--m", "2", "--reps", "500", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("fraction of pivots below 1e-8"));
    assert_eq!(csv_rows(&dir.path().join("manymeans.csv")).len(), 500);

    let report = pselect(&["report", dir.path().to_str().unwrap()]);
    assert!(report.status.success());
    assert!(stdout(&report).contains("repetitions: 500"));

    let out = pselect(&["manymeans", "--d", "2", "--m", "50000", "--reps", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("capped at pi = 1/2"));
}
