use serde::{Deserialize, Serialize};

use super::fit::linear_fit;
use crate::classical::{
    classical_overlap, pilot_box, stretched_gaussian_overlap, Flow, OverlapMethod, StretchedGaussianParams,
};
use crate::error::{Error, Result};
use crate::phase::SpatialGrid;
use crate::wigner::{cat_overlap_experiment, mean_displaced_overlap, OverlapDecomposition, SparseCatSpec};

/// Settings for the sparse-cat experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatStudyParams {
    pub hbar: f64,
    pub sizes: Vec<usize>,
    /// Minimum separation between components, in units of `√ħ`.
    pub separation: f64,
    pub x_half: f64,
    pub p_half: f64,
    pub n_points: usize,
    pub x_extent: f64,
    /// Number of displacements averaged over the admissible window.
    pub displacements: usize,
    pub seed: u64,
}

impl Default for CatStudyParams {
    fn default() -> Self {
        Self {
            hbar: 0.1,
            sizes: vec![2, 4, 8],
            separation: 8.0,
            x_half: 14.0,
            p_half: 2.5,
            n_points: 2048,
            x_extent: 20.0,
            displacements: 16,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatStudyRow {
    pub n: usize,
    /// Self-overlap decomposition, when the masks can be kept apart.
    pub decomposition: Option<OverlapDecomposition>,
    /// Displaced overlap averaged over the displacement window.
    pub mean_displaced_overlap: f64,
    /// Largest disagreement between the phase-space and wavefunction routes.
    pub route_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatStudy {
    pub rows: Vec<CatStudyRow>,
    /// Slope of `log ⟨O⟩` against `log N`.
    pub scaling_exponent: f64,
}

/// Evenly spaced displacements across the upper part of the admissible
/// window shared by every cat size.
fn displacement_grid(specs: &[SparseCatSpec], count: usize) -> Vec<f64> {
    let lo = specs.iter().map(|s| s.displacement_window().0).fold(0.0, f64::max);
    let hi = specs
        .iter()
        .map(|s| s.displacement_window().1)
        .fold(f64::INFINITY, f64::min);
    let count = count.max(2);
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

pub fn run_cat_study(params: &CatStudyParams) -> Result<CatStudy> {
    if params.sizes.len() < 2 {
        return Err(Error::TooFewPoints(params.sizes.len(), 2));
    }
    let grid = SpatialGrid::new(params.n_points, -params.x_extent, params.x_extent, params.hbar)?;
    let min_sep = params.separation * params.hbar.sqrt();
    let specs: Vec<SparseCatSpec> = params
        .sizes
        .iter()
        .map(|&n| {
            // resolve the decomposition wherever the masks can be kept apart
            SparseCatSpec::scattered(n, min_sep, params.x_half, params.p_half, params.hbar, params.seed, true).or_else(
                |_| {
                    SparseCatSpec::scattered(
                        n,
                        min_sep,
                        params.x_half,
                        params.p_half,
                        params.hbar,
                        params.seed,
                        false,
                    )
                },
            )
        })
        .collect::<Result<_>>()?;
    let deltas = displacement_grid(&specs, params.displacements);
    let mut rows = Vec::new();
    for (spec, &n) in specs.iter().zip(&params.sizes) {
        let mean = mean_displaced_overlap(spec, &grid, &deltas)?;
        let mut mismatch: f64 = 0.0;
        let mut decomposition = None;
        for &d in [deltas[0], deltas[deltas.len() / 2]].iter() {
            let r = cat_overlap_experiment(spec, &grid, d)?;
            mismatch = mismatch.max((r.displaced_overlap - r.displaced_overlap_direct).abs());
            decomposition = r.decomposition;
        }
        rows.push(CatStudyRow {
            n,
            decomposition,
            mean_displaced_overlap: mean,
            route_mismatch: mismatch,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_displaced_overlap.ln()).collect();
    let scaling_exponent = linear_fit(&xs, &ys)?.slope;
    Ok(CatStudy { rows, scaling_exponent })
}

/// Closed-form stretched-Gaussian overlap next to the value obtained by
/// pushing the equivalent linear flows through the box-overlap machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub t: f64,
    pub closed_form: f64,
    pub computed: f64,
}

impl OracleComparison {
    pub fn error(&self) -> f64 {
        (self.closed_form - self.computed).abs()
    }
}

pub fn stretched_oracle(
    params: &StretchedGaussianParams,
    times: &[f64],
    resolution: usize,
    seed: u64,
) -> Result<Vec<OracleComparison>> {
    let (plus, minus) = params.flows();
    let l0 = params.initial_density();
    let hbar = params.hbar();
    times
        .iter()
        .map(|&t| {
            let flows: [&dyn Flow; 2] = [&plus, &minus];
            let bx = pilot_box(&flows, &l0, t, 10_000, 0.1, seed)?;
            let computed = classical_overlap(&plus, &minus, &l0, t, &OverlapMethod::Box(bx), resolution, hbar)?;
            Ok(OracleComparison {
                t,
                closed_form: stretched_gaussian_overlap(params, t),
                computed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_at_reference_point() {
        let p = StretchedGaussianParams::new(1.0, 1.0, (0.01, 0.0)).unwrap();
        let rows = stretched_oracle(&p, &[1.0, 5.0], 256, 0).unwrap();
        for r in rows {
            assert!(r.error() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn oracle_with_momentum_drift() {
        let p = StretchedGaussianParams::new(0.5, 0.7, (0.05, 0.8)).unwrap();
        let rows = stretched_oracle(&p, &[0.5, 2.0, 4.0], 256, 0).unwrap();
        for r in rows {
            assert!(r.error() < 1e-6, "{r:?}");
        }
    }
}
