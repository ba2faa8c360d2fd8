use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::transform::{wigner_overlap, wigner_transform, WignerFunction};
use crate::error::{Error, Result};
use crate::phase::{check_support, overlap, SpatialGrid, Wavefunction};

/// Minimum phase-space distance between cat components, in units of `√ħ`.
pub const SPARSENESS_FACTOR: f64 = 5.0;

/// Radius, in units of `√ħ`, of the region attributed to each Gaussian or
/// interference term when decomposing the self-overlap.
pub const MASK_RADIUS_FACTOR: f64 = 3.0;

/// Superposition of `N` coherent states centred at `(x_j, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCatSpec {
    centers: Vec<(f64, f64)>,
    hbar: f64,
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn pair_midpoints(c: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for j in 0..c.len() {
        for k in j + 1..c.len() {
            out.push((0.5 * (c[j].0 + c[k].0), 0.5 * (c[j].1 + c[k].1)));
        }
    }
    out
}

/// Whether centres and pairwise midpoints are all at least `gap` apart.
fn masks_disjoint(centers: &[(f64, f64)], gap: f64) -> bool {
    let all: Vec<(f64, f64)> = centers.iter().copied().chain(pair_midpoints(centers)).collect();
    (0..all.len()).all(|a| (a + 1..all.len()).all(|b| distance(all[a], all[b]) >= gap))
}

impl SparseCatSpec {
    pub fn new(centers: Vec<(f64, f64)>, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::NonPositiveHbar(hbar));
        }
        if centers.is_empty() {
            return Err(Error::param("centers", "need at least one component"));
        }
        let limit = SPARSENESS_FACTOR * hbar.sqrt();
        for j in 0..centers.len() {
            for k in j + 1..centers.len() {
                if distance(centers[j], centers[k]) < limit {
                    return Err(Error::NotSparse(j, k));
                }
            }
        }
        Ok(Self { centers, hbar })
    }

    /// Seeded random placement of `n` centres in `[−x_half, x_half] × [−p_half, p_half]`
    /// with pairwise separation at least `min_separation`. With `clear_midpoints`
    /// the decomposition masks around centres and pairwise midpoints are also
    /// kept apart.
    pub fn scattered(
        n: usize,
        min_separation: f64,
        x_half: f64,
        p_half: f64,
        hbar: f64,
        seed: u64,
        clear_midpoints: bool,
    ) -> Result<Self> {
        let mask_gap = 2.0 * MASK_RADIUS_FACTOR * hbar.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centers: Vec<(f64, f64)> = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while centers.len() < n {
            attempts += 1;
            if attempts > 100_000 {
                return Err(Error::param(
                    "centers",
                    "could not place components at the requested separation",
                ));
            }
            let c = (rng.gen_range(-x_half..=x_half), rng.gen_range(-p_half..=p_half));
            if centers.iter().any(|&o| distance(o, c) < min_separation) {
                continue;
            }
            if clear_midpoints {
                let mut trial = centers.clone();
                trial.push(c);
                if !masks_disjoint(&trial, mask_gap) {
                    continue;
                }
            }
            centers.push(c);
        }
        Self::new(centers, hbar)
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Position spread of each component, `√(ħ/2)`.
    pub fn width(&self) -> f64 {
        (0.5 * self.hbar).sqrt()
    }

    pub fn max_separation(&self) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..self.centers.len() {
            for k in j + 1..self.centers.len() {
                d = d.max(distance(self.centers[j], self.centers[k]));
            }
        }
        d
    }

    /// Midpoints of every pair, where the interference terms sit.
    pub fn midpoints(&self) -> Vec<(f64, f64)> {
        pair_midpoints(&self.centers)
    }

    /// Admissible momentum displacements: zero, or `ħ/d_max ≤ |δ| ≤ √ħ/2`.
    pub fn displacement_window(&self) -> (f64, f64) {
        let lo = if self.len() > 1 {
            self.hbar / self.max_separation()
        } else {
            0.0
        };
        (lo, 0.5 * self.hbar.sqrt())
    }
}

/// Normalized `Σ_j exp(−(x−x_j)²/2ħ)·exp(i p_j x/ħ)`.
pub fn sparse_cat_state(spec: &SparseCatSpec, grid: &SpatialGrid) -> Result<Wavefunction> {
    if (grid.hbar() - spec.hbar).abs() > 1e-15 * spec.hbar {
        return Err(Error::param("grid", "grid hbar differs from the cat's hbar"));
    }
    let s = spec.width();
    for &(x, p) in &spec.centers {
        check_support(grid, x, p, s)?;
    }
    let hbar = spec.hbar;
    Wavefunction::from_fn(*grid, |x| {
        spec.centers
            .iter()
            .map(|&(xj, pj)| Complex64::from_polar((-(x - xj).powi(2) / (2.0 * hbar)).exp(), pj * x / hbar))
            .sum()
    })
}

/// Where the self-overlap `2πħ∫W²` of a sparse cat resides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapDecomposition {
    pub total: f64,
    /// Contribution from the regions around the coherent Gaussians.
    pub direct: f64,
    /// Contribution from the regions around the pairwise midpoints.
    pub interference: f64,
    /// Whatever falls outside every mask.
    pub residual: f64,
}

impl OverlapDecomposition {
    pub fn interference_share(&self) -> f64 {
        self.interference / self.total
    }

    pub fn direct_share(&self) -> f64 {
        self.direct / self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatOverlapReport {
    /// `None` when the masks around centres and midpoints would intersect.
    pub decomposition: Option<OverlapDecomposition>,
    pub displacement: f64,
    /// Moyal overlap of the state with its momentum-displaced copy.
    pub displaced_overlap: f64,
    /// Same quantity from the wavefunctions directly.
    pub displaced_overlap_direct: f64,
}

fn decompose(spec: &SparseCatSpec, w: &WignerFunction) -> Option<OverlapDecomposition> {
    let radius = MASK_RADIUS_FACTOR * spec.hbar.sqrt();
    if !masks_disjoint(&spec.centers, 2.0 * radius) {
        return None;
    }
    let centers = spec.centers.clone();
    let mids = spec.midpoints();
    let r2 = radius * radius;
    let inside =
        |pts: &[(f64, f64)], x: f64, p: f64| pts.iter().any(|&(cx, cp)| (x - cx).powi(2) + (p - cp).powi(2) <= r2);
    let (mut direct, mut interference, mut residual) = (0.0, 0.0, 0.0);
    for j in 0..w.n_x() {
        let x = w.x(j);
        for (k, v) in w.row(j).iter().enumerate() {
            let p = w.p(k);
            let v2 = v * v;
            if inside(&centers, x, p) {
                direct += v2;
            } else if inside(&mids, x, p) {
                interference += v2;
            } else {
                residual += v2;
            }
        }
    }
    let scale = 2.0 * std::f64::consts::PI * spec.hbar * w.dx() * w.dp();
    let (direct, interference, residual) = (direct * scale, interference * scale, residual * scale);
    Some(OverlapDecomposition {
        total: direct + interference + residual,
        direct,
        interference,
        residual,
    })
}

fn check_displacement(spec: &SparseCatSpec, displacement: f64) -> Result<()> {
    if displacement == 0.0 {
        return Ok(());
    }
    let (lo, hi) = spec.displacement_window();
    let d = displacement.abs();
    if !(d.is_finite() && d >= lo && d <= hi) {
        return Err(Error::param(
            "displacement",
            format!("|{displacement}| outside the window [{lo:.4}, {hi:.4}]"),
        ));
    }
    Ok(())
}

/// Decomposes the self-overlap of a sparse cat into Gaussian and interference
/// shares, and measures the overlap with a copy displaced by `displacement` in
/// momentum.
pub fn cat_overlap_experiment(spec: &SparseCatSpec, grid: &SpatialGrid, displacement: f64) -> Result<CatOverlapReport> {
    check_displacement(spec, displacement)?;
    let psi = sparse_cat_state(spec, grid)?;
    let w = wigner_transform(&psi)?;
    let decomposition = decompose(spec, &w);
    let moved = psi.boost(displacement)?;
    let (displaced_overlap, displaced_overlap_direct) = if displacement == 0.0 {
        (wigner_overlap(&w, &w)?, 1.0)
    } else {
        let wd = wigner_transform(&moved)?;
        (wigner_overlap(&w, &wd)?, overlap(&psi, &moved)?)
    };
    Ok(CatOverlapReport {
        decomposition,
        displacement,
        displaced_overlap,
        displaced_overlap_direct,
    })
}

/// Displaced overlap averaged over several displacement magnitudes, which
/// washes out accidental phase coincidences of a single displacement.
pub fn mean_displaced_overlap(spec: &SparseCatSpec, grid: &SpatialGrid, displacements: &[f64]) -> Result<f64> {
    if displacements.is_empty() {
        return Err(Error::param("displacements", "need at least one displacement"));
    }
    let psi = sparse_cat_state(spec, grid)?;
    let w = wigner_transform(&psi)?;
    let mut acc = 0.0;
    for &d in displacements {
        check_displacement(spec, d)?;
        let wd = wigner_transform(&psi.boost(d)?)?;
        acc += wigner_overlap(&w, &wd)?;
    }
    Ok(acc / displacements.len() as f64)
}
