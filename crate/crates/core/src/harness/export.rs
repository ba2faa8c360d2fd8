use std::path::Path;

use serde::Serialize;

use super::io::write_atomically;
use super::sweep::{FringeStudy, SweepRecord};
use crate::error::{Error, Result};
use crate::quantum::OverlapSeries;

/// Column order of the sweep table.
pub const SWEEP_COLUMNS: [&str; 8] = [
    "T",
    "tau_d_q",
    "tau_d_c",
    "tau_lb",
    "delta_x",
    "delta_p",
    "mean_delta_v",
    "converged_flag",
];

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomically(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in rows {
            out.serialize(r).map_err(std::io::Error::other)?;
        }
        out.flush()
    })
}

/// Writes sweep records ordered by `T`. Missing values are empty cells.
pub fn export_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.preparation_time.total_cmp(&b.preparation_time));
    if sorted.is_empty() {
        return write_atomically(path, |w| writeln!(w, "{}", SWEEP_COLUMNS.join(",")));
    }
    write_rows(path, &sorted)
}

pub fn load_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    if headers.iter().ne(SWEEP_COLUMNS) {
        return Err(csv_err(format!(
            "expected columns {}, found {}",
            SWEEP_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| csv_err(e.to_string())))
        .collect()
}

#[derive(Serialize)]
struct SeriesRow {
    tau: f64,
    o_q: f64,
    bound: f64,
    phi: f64,
    delta_v: f64,
    o_c: Option<f64>,
}

/// Quantum overlap, lower bound and (where computed) classical overlap on
/// the quantum sampling grid.
pub fn write_series_csv(series: &OverlapSeries, classical: &[(f64, f64)], path: &Path) -> Result<()> {
    let rows: Vec<SeriesRow> = (0..series.len())
        .map(|k| SeriesRow {
            tau: series.times[k],
            o_q: series.overlap[k],
            bound: series.bound[k],
            phi: series.phi[k],
            delta_v: series.delta_v[k],
            o_c: classical
                .iter()
                .find(|(t, _)| (t - series.times[k]).abs() < 1e-9)
                .map(|&(_, v)| v),
        })
        .collect();
    write_rows(path, &rows)
}

#[derive(Serialize)]
struct FringeRow {
    delta_p: f64,
    tau_d_q: f64,
    in_fit: bool,
    fit: f64,
}

pub fn write_fringe_csv(study: &FringeStudy, path: &Path) -> Result<()> {
    let n_fit = study.points.len() - study.excluded;
    let rows: Vec<FringeRow> = study
        .points
        .iter()
        .enumerate()
        .map(|(k, &(dp, tau))| FringeRow {
            delta_p: dp,
            tau_d_q: tau,
            in_fit: k < n_fit,
            fit: study.fit.predict(dp),
        })
        .collect();
    write_rows(path, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SweepRecord> {
        vec![
            SweepRecord {
                preparation_time: 4.92,
                tau_d_quantum: Some(1.5049999999999),
                tau_d_classical: None,
                tau_lower_bound: Some(1.497),
                delta_x_fringe: Some(0.19),
                delta_p_fringe: Some(0.0574),
                mean_delta_v: Some(0.0171),
                converged: Some(false),
            },
            SweepRecord {
                preparation_time: 2.0,
                tau_d_quantum: Some(2.848),
                tau_d_classical: Some(2.1),
                tau_lower_bound: Some(2.831),
                delta_x_fringe: Some(0.29),
                delta_p_fringe: Some(0.1722),
                mean_delta_v: Some(0.0061),
                converged: Some(true),
            },
        ]
    }

    #[test]
    fn round_trip_sorted_by_t() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let recs = sample();
        export_csv(&recs, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(back, vec![recs[1], recs[0]]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_COLUMNS.join(","));
        assert!(text.contains(",,"));
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "T,tau\n1,2\n").unwrap();
        assert!(matches!(load_csv(&path), Err(Error::Csv { .. })));
    }

    #[test]
    fn bad_cell_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            format!("{}\n2,1,,1,1,1,1,true\n3,x,,1,1,1,1,true\n", SWEEP_COLUMNS.join(",")),
        )
        .unwrap();
        let msg = load_csv(&path).unwrap_err().to_string();
        assert!(msg.contains("line: 3") || msg.contains("line 3"), "{msg}");
    }
}
