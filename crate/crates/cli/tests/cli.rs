use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fork-overlap"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Short quantum-only sweep on a small grid.
const QUICK: &str = "
tau_max = 3.0
preparation_times = [1.0, 2.0]

[grid]
n_points = 1024
x_min = -20.0
x_max = 20.0
";

#[test]
fn poincare_writes_one_row_per_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["poincare", "--periods", "5", "--point", "6,0", "--point", "-2.5,0.3"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("poincare.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed_id,n,x,p");
    assert_eq!(lines.len(), 1 + 2 * 6);
    assert!(lines[1].starts_with("0,0,6"));
}

#[test]
fn sweep_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("quick.toml");
    fs::write(&config, QUICK).unwrap();
    let cfg = config.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, workers) in [(&a, "1"), (&b, "2")] {
        let out = run(d, &["--config", cfg, "--workers", workers, "sweep", "--quantum-only"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let first = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("sweep.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("T,tau_d_q,tau_d_c,tau_lb,delta_x,delta_p,mean_delta_v,converged_flag\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn evolve_emits_series() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("quick.toml");
    fs::write(&config, QUICK).unwrap();
    let out = run(
        dir.path(),
        &[
            "--config",
            config.to_str().unwrap(),
            "evolve",
            "--prep",
            "2",
            "--quantum-only",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("series_T2.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,o_q,bound,phi,delta_v,o_c"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0.0");
    assert!(first[5].is_empty());
}

#[test]
fn fringe_reads_existing_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let mut text = String::from("T,tau_d_q,tau_d_c,tau_lb,delta_x,delta_p,mean_delta_v,converged_flag\n");
    for k in 0..8 {
        let dp = 0.01 + 0.005 * k as f64;
        let tau = if k < 5 { 30.0 * dp + 0.1 } else { 0.5 };
        text.push_str(&format!("{},{tau},,{},0.1,{dp},0.02,\n", 2 + k, 0.9 * tau));
    }
    fs::write(&sweep, text).unwrap();
    let out = run(dir.path(), &["fringe", "--from", sweep.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("fringe.csv")).unwrap();
    assert!(csv.starts_with("delta_p,tau_d_q,in_fit,fit\n"));
    assert_eq!(csv.lines().filter(|l| l.contains(",true,")).count(), 5);
}

#[test]
fn bad_config_fails_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "[hamiltonian]\nkapa = 0.3\n").unwrap();
    let out = run(dir.path(), &["--config", config.to_str().unwrap(), "sweep"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("kapa"), "{err}");
}

#[test]
fn off_lattice_preparation_time_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evolve", "--prep", "2.001", "--quantum-only"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("preparation_time"));
}

#[test]
fn zero_workers_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--workers", "0", "poincare", "--periods", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("workers"));
}
