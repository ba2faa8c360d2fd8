use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ClassicalMethod, ExperimentConfig};
use super::fit::{linear_fit, LinearFit};
use crate::classical::{
    classical_overlap, classical_overlap_checked, pilot_box, pullback_overlap_series, Flow, ForkedFlow,
    HamiltonianFlow, OverlapMethod,
};
use crate::error::{Error, Result};
use crate::quantum::{evolve_fork, fringe_scales, Branch, OverlapSeries};

/// First time the series falls to `threshold`, linearly interpolated between
/// the bracketing samples. `None` if it never does.
pub fn extract_decoherence_time(times: &[f64], values: &[f64], threshold: f64) -> Result<Option<f64>> {
    if times.len() != values.len() {
        return Err(Error::MalformedSeries(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::param(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    match values.first() {
        None => return Err(Error::MalformedSeries("empty series".into())),
        Some(v) if (v - 1.0).abs() > 1e-6 => {
            return Err(Error::MalformedSeries(format!("series starts at {v}, not 1")));
        }
        _ => {}
    }
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        if b <= threshold {
            let frac = if a == b { 0.0 } else { (a - threshold) / (a - b) };
            return Ok(Some(times[k - 1] + frac * (times[k] - times[k - 1])));
        }
    }
    Ok(None)
}

/// One preparation time of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "T")]
    pub preparation_time: f64,
    #[serde(rename = "tau_d_q")]
    pub tau_d_quantum: Option<f64>,
    #[serde(rename = "tau_d_c")]
    pub tau_d_classical: Option<f64>,
    #[serde(rename = "tau_lb")]
    pub tau_lower_bound: Option<f64>,
    /// `ħ/ΔP` of the prepared state.
    #[serde(rename = "delta_x")]
    pub delta_x_fringe: Option<f64>,
    /// `ħ/ΔX` of the prepared state.
    #[serde(rename = "delta_p")]
    pub delta_p_fringe: Option<f64>,
    pub mean_delta_v: Option<f64>,
    /// Whether the classical value survived 2× refinement; empty when no
    /// classical run was made.
    #[serde(rename = "converged_flag")]
    pub converged: Option<bool>,
}

impl SweepRecord {
    pub fn new(preparation_time: f64) -> Self {
        Self {
            preparation_time,
            ..Default::default()
        }
    }

    /// Classical τ_D only when it passed the refinement check.
    pub fn converged_classical(&self) -> Option<f64> {
        self.tau_d_classical.filter(|_| self.converged == Some(true))
    }
}

/// A preparation time whose run failed, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub preparation_time: f64,
    pub message: String,
}

/// Records in preparation-time order, one per configured `T`, plus any
/// per-point failures. Failed points keep a record with empty fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
}

impl Sweep {
    fn collect(times: &[f64], outcomes: Vec<Result<SweepRecord>>) -> Self {
        let mut sweep = Sweep::default();
        for (&t, outcome) in times.iter().zip(outcomes) {
            match outcome {
                Ok(r) => sweep.records.push(r),
                Err(e) => {
                    sweep.records.push(SweepRecord::new(t));
                    sweep.failures.push(SweepFailure {
                        preparation_time: t,
                        message: e.to_string(),
                    });
                }
            }
        }
        sweep
    }

    /// Copies the classical columns of `classical` into the matching records.
    pub fn merge_classical(&mut self, classical: &Sweep) {
        for (r, c) in self.records.iter_mut().zip(&classical.records) {
            debug_assert_eq!(r.preparation_time, c.preparation_time);
            r.tau_d_classical = c.tau_d_classical;
            r.converged = c.converged;
        }
        self.failures.extend(classical.failures.iter().cloned());
    }
}

/// Quantum overlap series for one preparation time.
pub fn quantum_series(config: &ExperimentConfig, preparation_time: f64) -> Result<OverlapSeries> {
    let psi0 = config.initial_wavefunction()?;
    evolve_fork(&psi0, &config.hamiltonian(), &config.schedule(preparation_time)?)
}

/// Builds a record from a finished quantum run.
pub fn quantum_record(config: &ExperimentConfig, series: &OverlapSeries) -> Result<SweepRecord> {
    let tau_d = extract_decoherence_time(&series.times, &series.overlap, config.threshold)?;
    let tau_lb = extract_decoherence_time(&series.times, &series.bound, config.threshold)?;
    let fringes = fringe_scales(&series.prepared, config.hbar)?;
    // average spread over the samples up to (and including) the crossing
    let horizon = tau_d.unwrap_or(f64::INFINITY);
    let upto = series
        .times
        .iter()
        .position(|&t| t >= horizon)
        .map_or(series.len(), |k| k + 1);
    let mean_dv = series.delta_v[..upto].iter().sum::<f64>() / upto as f64;
    Ok(SweepRecord {
        preparation_time: series.preparation_time,
        tau_d_quantum: tau_d,
        tau_d_classical: None,
        tau_lower_bound: tau_lb,
        delta_x_fringe: Some(fringes.delta_x),
        delta_p_fringe: Some(fringes.delta_p),
        mean_delta_v: Some(mean_dv),
        converged: None,
    })
}

/// One fork run per preparation time, in parallel, results in `T` order.
pub fn run_quantum_sweep(config: &ExperimentConfig) -> Result<Sweep> {
    config.validate()?;
    let times = &config.preparation_times;
    let outcomes: Vec<Result<SweepRecord>> = times
        .par_iter()
        .map(|&t| quantum_series(config, t).and_then(|s| quantum_record(config, &s)))
        .collect();
    Ok(Sweep::collect(times, outcomes))
}

/// Classical overlap decay after one fork.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSeries {
    pub preparation_time: f64,
    pub times: Vec<f64>,
    pub overlap: Vec<f64>,
    /// Values at the refined resolution for the samples bracketing the
    /// threshold crossing (or the last sample when there is none).
    pub refined: Vec<(f64, f64, f64)>,
}

impl ClassicalSeries {
    pub fn converged(&self) -> bool {
        self.refined
            .iter()
            .all(|&(_, coarse, fine)| (coarse - fine).abs() <= crate::classical::REFINEMENT_TOLERANCE * fine.abs())
    }
}

fn branch_flows(config: &ExperimentConfig, preparation_time: f64) -> Result<(ForkedFlow, ForkedFlow)> {
    let horizon = preparation_time + config.classical.tau_max + 1.0;
    let base = HamiltonianFlow::with_horizon(config.hamiltonian(), config.dt, horizon)?;
    Ok((
        ForkedFlow::new(&base, Branch::Plus, preparation_time),
        ForkedFlow::new(&base, Branch::Minus, preparation_time),
    ))
}

/// Classical overlap on the `classical.sample_every` grid until it falls to
/// the threshold, with the crossing re-evaluated at twice the resolution.
pub fn classical_series(config: &ExperimentConfig, preparation_time: f64) -> Result<ClassicalSeries> {
    let params = &config.classical;
    let (plus, minus) = branch_flows(config, preparation_time)?;
    let l0 = config.initial_density()?;
    let n_samples = (params.tau_max / params.sample_every - 1e-9).ceil() as usize;
    let taus: Vec<f64> = (0..=n_samples).map(|k| k as f64 * params.sample_every).collect();
    let abs: Vec<f64> = taus.iter().map(|tau| preparation_time + tau).collect();
    let method_at = |t: f64| -> Result<OverlapMethod> {
        Ok(match params.method {
            ClassicalMethod::Pullback => OverlapMethod::Pullback,
            ClassicalMethod::Box => {
                let flows: [&dyn Flow; 2] = [&plus, &minus];
                OverlapMethod::Box(pilot_box(
                    &flows,
                    &l0,
                    t,
                    params.pilot_samples,
                    params.pilot_margin,
                    config.seed,
                )?)
            }
        })
    };
    let overlap = match params.method {
        ClassicalMethod::Pullback => pullback_overlap_series(
            &plus,
            &minus,
            &l0,
            &abs,
            params.resolution,
            config.hbar,
            Some(config.threshold),
        )?,
        ClassicalMethod::Box => {
            let mut out = Vec::new();
            for &t in &abs {
                let v = classical_overlap(&plus, &minus, &l0, t, &method_at(t)?, params.resolution, config.hbar)?;
                out.push(v);
                if v <= config.threshold {
                    break;
                }
            }
            out
        }
    };
    let last = overlap.len() - 1;
    let bracket = if overlap[last] <= config.threshold && last > 0 {
        vec![last - 1, last]
    } else {
        vec![last]
    };
    let mut refined = Vec::new();
    for k in bracket {
        let c = classical_overlap_checked(
            &plus,
            &minus,
            &l0,
            abs[k],
            &method_at(abs[k])?,
            params.resolution,
            config.hbar,
        )?;
        refined.push((taus[k], c.value, c.refined));
    }
    Ok(ClassicalSeries {
        preparation_time,
        times: taus[..overlap.len()].to_vec(),
        overlap,
        refined,
    })
}

/// Classical τ_D per preparation time; values that move by more than the
/// refinement tolerance are kept but flagged unconverged.
pub fn run_classical_sweep(config: &ExperimentConfig) -> Result<Sweep> {
    config.validate()?;
    let times = &config.preparation_times;
    let outcomes: Vec<Result<SweepRecord>> = times
        .iter()
        .map(|&t| {
            let s = classical_series(config, t)?;
            Ok(SweepRecord {
                tau_d_classical: extract_decoherence_time(&s.times, &s.overlap, config.threshold)?,
                converged: Some(s.converged()),
                ..SweepRecord::new(t)
            })
        })
        .collect();
    Ok(Sweep::collect(times, outcomes))
}

/// Decoherence time against momentum fringe scale, with a straight-line fit
/// over all but the largest few `δp`.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeStudy {
    /// `(δp, τ_D)` sorted by `δp`.
    pub points: Vec<(f64, f64)>,
    /// Number of largest-`δp` points left out of the fit.
    pub excluded: usize,
    pub fit: LinearFit,
}

impl FringeStudy {
    pub fn fitted(&self) -> &[(f64, f64)] {
        &self.points[..self.points.len() - self.excluded]
    }

    pub fn excluded_points(&self) -> &[(f64, f64)] {
        &self.points[self.points.len() - self.excluded..]
    }

    /// `τ_D − fit(δp)` for the excluded points.
    pub fn excluded_residuals(&self) -> Vec<f64> {
        self.excluded_points()
            .iter()
            .map(|&(x, y)| y - self.fit.predict(x))
            .collect()
    }
}

pub const FRINGE_EXCLUDED: usize = 3;
pub const FRINGE_MIN_POINTS: usize = 5;

pub fn run_fringe_study(records: &[SweepRecord]) -> Result<FringeStudy> {
    let mut points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.delta_p_fringe?, r.tau_d_quantum?)))
        .collect();
    if points.len() < FRINGE_MIN_POINTS {
        return Err(Error::TooFewPoints(points.len(), FRINGE_MIN_POINTS));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let used = &points[..points.len() - FRINGE_EXCLUDED];
    let xs: Vec<f64> = used.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(FringeStudy {
        points,
        excluded: FRINGE_EXCLUDED,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn extraction_examples() {
        assert_eq!(
            extract_decoherence_time(&[0.0, 1.0], &[1.0, 0.8], 0.9).unwrap(),
            Some(0.5)
        );
        assert_eq!(
            extract_decoherence_time(&[0.0, 1.0, 2.0], &[1.0; 3], 0.9).unwrap(),
            None
        );
        let t = extract_decoherence_time(&[0.0, 0.1, 0.2], &[1.0, 0.92, 0.86], 0.9)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(t, 0.4 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn extraction_rejects_malformed() {
        assert!(extract_decoherence_time(&[0.0, 1.0], &[0.95, 0.8], 0.9).is_err());
        assert!(extract_decoherence_time(&[0.0], &[1.0, 0.8], 0.9).is_err());
        assert!(extract_decoherence_time(&[], &[], 0.9).is_err());
        assert!(extract_decoherence_time(&[0.0, 1.0], &[1.0, 0.8], 1.0).is_err());
    }

    #[test]
    fn higher_threshold_never_later() {
        let times: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| (-0.3 * t * t).exp()).collect();
        let a = extract_decoherence_time(&times, &values, 0.9).unwrap().unwrap();
        let b = extract_decoherence_time(&times, &values, 0.95).unwrap().unwrap();
        assert!(b <= a);
    }

    fn record(dp: f64, tau: f64) -> SweepRecord {
        SweepRecord {
            delta_p_fringe: Some(dp),
            tau_d_quantum: Some(tau),
            ..SweepRecord::new(0.0)
        }
    }

    #[test]
    fn fringe_fit_excludes_largest() {
        let mut recs: Vec<SweepRecord> = (1..=8)
            .map(|k| record(0.01 * k as f64, 30.0 * 0.01 * k as f64))
            .collect();
        recs.push(record(0.5, 3.0));
        recs.push(record(0.2, 2.0));
        recs.push(record(0.3, 2.5));
        let study = run_fringe_study(&recs).unwrap();
        assert_abs_diff_eq!(study.fit.slope, 30.0, epsilon = 1e-9);
        assert!(study.fit.r > 0.999);
        assert_eq!(study.excluded_points(), &[(0.2, 2.0), (0.3, 2.5), (0.5, 3.0)]);
        assert!(study.excluded_residuals().iter().all(|r| *r < 0.0));
    }

    #[test]
    fn fringe_needs_enough_points() {
        let recs: Vec<SweepRecord> = (1..=4).map(|k| record(k as f64, k as f64)).collect();
        assert!(matches!(run_fringe_study(&recs), Err(Error::TooFewPoints(4, 5))));
    }
}
