use std::fs;

use fork_overlap::classical::{poincare_section, PhaseSpacePoint};
use fork_overlap::harness::{
    export_csv, load_config, load_csv, quantum_series, run_fringe_study, run_quantum_sweep, write_fringe_csv,
    write_series_csv, ExperimentConfig, GridParams, SweepRecord, SWEEP_COLUMNS,
};
use fork_overlap::quantum::DrivenHamiltonian;
use fork_overlap::Error;

fn quick_config() -> ExperimentConfig {
    ExperimentConfig {
        tau_max: 3.0,
        preparation_times: vec![1.0, 2.0, 3.0],
        grid: GridParams {
            n_points: 1024,
            x_min: -20.0,
            x_max: 20.0,
        },
        ..Default::default()
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    let mut c = quick_config();
    c.seed = 42;
    fs::write(&path, c.to_toml()).unwrap();
    assert_eq!(load_config(&path).unwrap(), c);
}

#[test]
fn config_error_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "dt = \"small\"\n").unwrap();
    let err = load_config(&path).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
    let msg = err.to_string();
    assert!(msg.contains("exp.toml") && msg.contains("dt"), "{msg}");
}

#[test]
fn sweep_csv_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config();
    let sweep = run_quantum_sweep(&config).unwrap();
    assert!(sweep.failures.is_empty(), "{:?}", sweep.failures);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    export_csv(&sweep.records, &a).unwrap();
    // reversed input still serializes in T order
    let reversed: Vec<SweepRecord> = sweep.records.iter().rev().cloned().collect();
    export_csv(&reversed, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let header = fs::read_to_string(&a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, SWEEP_COLUMNS.join(","));
    assert_eq!(load_csv(&a).unwrap(), sweep.records);
}

#[test]
fn partial_classical_columns_survive() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("partial.csv");
    let records = vec![
        SweepRecord {
            tau_d_quantum: Some(2.85),
            tau_d_classical: Some(2.82),
            converged: Some(true),
            ..SweepRecord::new(2.0)
        },
        SweepRecord {
            tau_d_quantum: Some(0.54),
            tau_d_classical: Some(0.4),
            converged: Some(false),
            ..SweepRecord::new(40.0)
        },
    ];
    export_csv(&records, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().nth(2).unwrap().ends_with(",false"), "{text}");
    let back = load_csv(&path).unwrap();
    assert_eq!(back, records);
    assert_eq!(back[1].converged_classical(), None);
}

#[test]
fn empty_sweep_still_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    export_csv(&[], &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().trim_end(), SWEEP_COLUMNS.join(","));
    assert!(load_csv(&path).unwrap().is_empty());
}

#[test]
fn wrong_header_lists_expected_and_found() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "T,tau\n1,2\n").unwrap();
    let msg = load_csv(&path).unwrap_err().to_string();
    assert!(msg.contains("tau_d_q") && msg.contains("T,tau"), "{msg}");
}

#[test]
fn series_and_fringe_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config();
    let series = quantum_series(&config, 2.0).unwrap();
    let path = dir.path().join("series.csv");
    write_series_csv(&series, &[(0.0, 1.0), (0.05, 0.99)], &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,o_q,bound,phi,delta_v,o_c");
    assert_eq!(lines.len(), series.len() + 1);
    assert!(lines[2].ends_with(",0.99"));
    assert!(lines[3].ends_with(','));

    let records: Vec<SweepRecord> = (0..8)
        .map(|k| {
            let dp = 0.01 * (k + 1) as f64;
            SweepRecord {
                tau_d_quantum: Some(if k < 5 { 20.0 * dp } else { 0.3 }),
                delta_p_fringe: Some(dp),
                ..SweepRecord::new(k as f64)
            }
        })
        .collect();
    let study = run_fringe_study(&records).unwrap();
    let path = dir.path().join("fringe.csv");
    write_fringe_csv(&study, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("delta_p,tau_d_q,in_fit,fit"));
    assert_eq!(text.lines().filter(|l| l.contains(",false,")).count(), 3);
}

#[test]
fn poincare_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = [PhaseSpacePoint::new(6.0, 0.0), PhaseSpacePoint::new(1.0, 0.5)];
    let cloud = poincare_section(&seeds, 3, &DrivenHamiltonian::chaotic(), 0.005).unwrap();
    let path = dir.path().join("poincare.csv");
    cloud.write_csv(&path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["seed_id", "n", "x", "p"]
    );
    assert_eq!(reader.records().count(), 8);
}
