use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::InitialGaussianDensity;
use super::flow::{Flow, PhaseSpacePoint};
use crate::error::{Error, Result};

/// Radius of the initial support in units of the density's widths. The mass
/// outside is `e^{−15.125} ≈ 2.7e-7`.
pub const SUPPORT_RADIUS: f64 = 5.5;

/// Largest mass allowed to leave an evaluation box.
pub const CAPTURE_TOLERANCE: f64 = 1e-6;

/// Relative change under 2× refinement above which a value is unconverged.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;

// lattice used to estimate how much mass leaves a box
const CAPTURE_LATTICE: usize = 96;

/// Axis-aligned rectangle in phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl PhaseBox {
    pub fn new(x_min: f64, x_max: f64, p_min: f64, p_max: f64) -> Result<Self> {
        if !(x_min < x_max && x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::DegenerateInterval { x_min, x_max });
        }
        if !(p_min < p_max && p_min.is_finite() && p_max.is_finite()) {
            return Err(Error::DegenerateInterval {
                x_min: p_min,
                x_max: p_max,
            });
        }
        Ok(Self {
            x_min,
            x_max,
            p_min,
            p_max,
        })
    }

    /// Bounding box of `points` widened by `margin` times its extent on each side.
    pub fn covering(points: &[PhaseSpacePoint], margin: f64) -> Result<Self> {
        let first = points.first().ok_or(Error::TooFewPoints(0, 1))?;
        let mut b = Self {
            x_min: first.x,
            x_max: first.x,
            p_min: first.p,
            p_max: first.p,
        };
        for z in points {
            b.x_min = b.x_min.min(z.x);
            b.x_max = b.x_max.max(z.x);
            b.p_min = b.p_min.min(z.p);
            b.p_max = b.p_max.max(z.p);
        }
        Ok(b.widened(margin))
    }

    pub fn widened(&self, margin: f64) -> Self {
        let wx = margin * (self.x_max - self.x_min).max(1e-12);
        let wp = margin * (self.p_max - self.p_min).max(1e-12);
        Self {
            x_min: self.x_min - wx,
            x_max: self.x_max + wx,
            p_min: self.p_min - wp,
            p_max: self.p_max + wp,
        }
    }

    pub fn contains(&self, z: PhaseSpacePoint) -> bool {
        z.x >= self.x_min && z.x <= self.x_max && z.p >= self.p_min && z.p <= self.p_max
    }

    /// Centre of cell `(i, j)` on an `n × n` subdivision.
    fn cell(&self, n: usize, i: usize, j: usize) -> PhaseSpacePoint {
        let hx = (self.x_max - self.x_min) / n as f64;
        let hp = (self.p_max - self.p_min) / n as f64;
        PhaseSpacePoint::new(self.x_min + (i as f64 + 0.5) * hx, self.p_min + (j as f64 + 0.5) * hp)
    }

    fn cell_area(&self, n: usize) -> f64 {
        (self.x_max - self.x_min) * (self.p_max - self.p_min) / (n * n) as f64
    }

    /// Square enclosing the initial support of `l0`.
    pub fn initial_support(l0: &InitialGaussianDensity) -> Self {
        Self {
            x_min: l0.x0 - SUPPORT_RADIUS * l0.sigma_x,
            x_max: l0.x0 + SUPPORT_RADIUS * l0.sigma_x,
            p_min: l0.p0 - SUPPORT_RADIUS * l0.sigma_p,
            p_max: l0.p0 + SUPPORT_RADIUS * l0.sigma_p,
        }
    }
}

/// How the overlap integral is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum OverlapMethod {
    /// Cells of a fixed box at the evaluation time; each cell centre is
    /// traced back to `t = 0` under both flows.
    Box(PhaseBox),
    /// Cells of the initial support; each point is carried forward under one
    /// flow and back under the other. Volume preservation makes this the same
    /// integral as the box form, and it needs no box.
    Pullback,
}

const SUPPORT_EXPONENT: f64 = 0.5 * SUPPORT_RADIUS * SUPPORT_RADIUS;

fn normalization(hbar: f64) -> f64 {
    2.0 * std::f64::consts::PI * hbar
}

/// Sums `f(i, j)` over an `n × n` lattice, parallel over rows and reduced in
/// row order so the result does not depend on the thread count.
fn lattice_sum<F>(n: usize, f: F) -> Result<f64>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).try_fold(0.0, |acc, j| Ok::<_, Error>(acc + f(i, j)?)))
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum())
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(Error::param(
            "resolution",
            format!("need at least 2 cells per axis, got {resolution}"),
        ));
    }
    Ok(())
}

/// Initial mass whose image under `flow` at time `t` lies outside `bx`,
/// estimated on a lattice over the initial support. By Liouville's theorem
/// this is the mass of the evolved density outside the box.
pub fn escaped_mass<F: Flow + ?Sized>(flow: &F, l0: &InitialGaussianDensity, t: f64, bx: &PhaseBox) -> Result<f64> {
    let support = PhaseBox::initial_support(l0);
    let n = CAPTURE_LATTICE;
    let area = support.cell_area(n);
    let out = lattice_sum(n, |i, j| {
        let z0 = support.cell(n, i, j);
        if l0.exponent(z0) > SUPPORT_EXPONENT {
            return Ok(0.0);
        }
        let z = flow.map(z0, 0.0, t)?;
        Ok(if bx.contains(z) { 0.0 } else { l0.value(z0) * area })
    })?;
    // the truncated tail is counted as escaped too
    Ok(out + (-SUPPORT_EXPONENT).exp())
}

/// `2πħ ∫ L₊(z,t) L₋(z,t) dz` with `L±` the density `l0` transported by the
/// two flows. Both flows run from `0` to `t`.
pub fn classical_overlap<F, G>(
    flow_plus: &F,
    flow_minus: &G,
    l0: &InitialGaussianDensity,
    t: f64,
    method: &OverlapMethod,
    resolution: usize,
    hbar: f64,
) -> Result<f64>
where
    F: Flow + ?Sized,
    G: Flow + ?Sized,
{
    check_resolution(resolution)?;
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::NonPositiveHbar(hbar));
    }
    let n = resolution;
    match method {
        OverlapMethod::Box(bx) => {
            for escaped in [
                escaped_mass(flow_plus, l0, t, bx)?,
                escaped_mass(flow_minus, l0, t, bx)?,
            ] {
                if escaped > CAPTURE_TOLERANCE {
                    return Err(Error::SupportEscape(escaped));
                }
            }
            let sum = lattice_sum(n, |i, j| {
                let z = bx.cell(n, i, j);
                let e1 = l0.exponent(flow_plus.map(z, t, 0.0)?);
                if e1 > 2.0 * SUPPORT_EXPONENT {
                    return Ok(0.0);
                }
                let e2 = l0.exponent(flow_minus.map(z, t, 0.0)?);
                Ok((-e1 - e2).exp())
            })?;
            Ok(normalization(hbar) * l0.peak() * l0.peak() * sum * bx.cell_area(n))
        }
        OverlapMethod::Pullback => {
            let support = PhaseBox::initial_support(l0);
            let sum = lattice_sum(n, |i, j| {
                let z0 = support.cell(n, i, j);
                let e0 = l0.exponent(z0);
                if e0 > SUPPORT_EXPONENT {
                    return Ok(0.0);
                }
                let a = l0.exponent(flow_minus.map(flow_plus.map(z0, 0.0, t)?, t, 0.0)?);
                let b = l0.exponent(flow_plus.map(flow_minus.map(z0, 0.0, t)?, t, 0.0)?);
                Ok(0.5 * ((-e0 - a).exp() + (-e0 - b).exp()))
            })?;
            Ok(normalization(hbar) * l0.peak() * l0.peak() * sum * support.cell_area(n))
        }
    }
}

/// An overlap together with its value at twice the resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedOverlap {
    pub value: f64,
    pub refined: f64,
}

impl CheckedOverlap {
    pub fn relative_change(&self) -> f64 {
        (self.value - self.refined).abs() / self.refined.abs().max(f64::MIN_POSITIVE)
    }

    pub fn converged(&self) -> bool {
        self.relative_change() <= REFINEMENT_TOLERANCE
    }
}

/// [`classical_overlap`] at `resolution` and `2·resolution`.
pub fn classical_overlap_checked<F, G>(
    flow_plus: &F,
    flow_minus: &G,
    l0: &InitialGaussianDensity,
    t: f64,
    method: &OverlapMethod,
    resolution: usize,
    hbar: f64,
) -> Result<CheckedOverlap>
where
    F: Flow + ?Sized,
    G: Flow + ?Sized,
{
    Ok(CheckedOverlap {
        value: classical_overlap(flow_plus, flow_minus, l0, t, method, resolution, hbar)?,
        refined: classical_overlap(flow_plus, flow_minus, l0, t, method, 2 * resolution, hbar)?,
    })
}

/// Pullback overlap on an increasing time grid, carrying the forward images
/// along so each sample costs one backward pass per cell. Stops after the
/// first sample whose value is at or below `stop_below`.
pub fn pullback_overlap_series<F, G>(
    flow_plus: &F,
    flow_minus: &G,
    l0: &InitialGaussianDensity,
    times: &[f64],
    resolution: usize,
    hbar: f64,
    stop_below: Option<f64>,
) -> Result<Vec<f64>>
where
    F: Flow + ?Sized,
    G: Flow + ?Sized,
{
    check_resolution(resolution)?;
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::MalformedSeries(
            "times must be non-negative and increasing".into(),
        ));
    }
    let support = PhaseBox::initial_support(l0);
    let n = resolution;
    let mut cells: Vec<(PhaseSpacePoint, f64, PhaseSpacePoint, PhaseSpacePoint)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z0 = support.cell(n, i, j);
            let e0 = l0.exponent(z0);
            if e0 <= SUPPORT_EXPONENT {
                cells.push((z0, e0, z0, z0));
            }
        }
    }
    let scale = normalization(hbar) * l0.peak() * l0.peak() * support.cell_area(n);
    let chunk = n.max(1);
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for &t in times {
        let partial: Vec<f64> = cells
            .par_chunks_mut(chunk)
            .map(|block| {
                let mut acc = 0.0;
                for (_, e0, zp, zm) in block.iter_mut() {
                    *zp = flow_plus.map(*zp, t_prev, t)?;
                    *zm = flow_minus.map(*zm, t_prev, t)?;
                    let a = l0.exponent(flow_minus.map(*zp, t, 0.0)?);
                    let b = l0.exponent(flow_plus.map(*zm, t, 0.0)?);
                    acc += 0.5 * ((-*e0 - a).exp() + (-*e0 - b).exp());
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let value = scale * partial.iter().sum::<f64>();
        out.push(value);
        t_prev = t;
        if stop_below.is_some_and(|s| value <= s) {
            break;
        }
    }
    Ok(out)
}

/// Bounding box of a seeded cloud of `samples` points drawn from `l0` and
/// pushed to time `t` by every flow, widened by `margin` and then doubled
/// in margin until every flow keeps its mass inside.
pub fn pilot_box(
    flows: &[&dyn Flow],
    l0: &InitialGaussianDensity,
    t: f64,
    samples: usize,
    margin: f64,
    seed: u64,
) -> Result<PhaseBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<PhaseSpacePoint> = (0..samples)
        .map(|_| {
            let u: f64 = StandardNormal.sample(&mut rng);
            let v: f64 = StandardNormal.sample(&mut rng);
            PhaseSpacePoint::new(l0.x0 + u * l0.sigma_x, l0.p0 + v * l0.sigma_p)
        })
        .collect();
    let mut cloud = Vec::with_capacity(samples * flows.len());
    for f in flows {
        let moved: Vec<PhaseSpacePoint> = starts.par_iter().map(|&z| f.map(z, 0.0, t)).collect::<Result<_>>()?;
        cloud.extend(moved);
    }
    let tight = PhaseBox::covering(&cloud, 0.0)?;
    let mut m = margin;
    for _ in 0..8 {
        let bx = tight.widened(m);
        let mut worst: f64 = 0.0;
        for f in flows {
            worst = worst.max(escaped_mass(*f, l0, t, &bx)?);
        }
        if worst <= CAPTURE_TOLERANCE {
            return Ok(bx);
        }
        m = 2.0 * m.max(0.05);
    }
    Err(Error::SupportEscape(f64::NAN))
}

/// Mass of the density transported by `flow`, integrated over `bx`.
pub fn transported_mass<F: Flow + ?Sized>(
    flow: &F,
    l0: &InitialGaussianDensity,
    t: f64,
    bx: &PhaseBox,
    resolution: usize,
) -> Result<f64> {
    check_resolution(resolution)?;
    let n = resolution;
    Ok(lattice_sum(n, |i, j| Ok(l0.value(flow.map(bx.cell(n, i, j), t, 0.0)?)))? * bx.cell_area(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::flow::{ForkedFlow, HamiltonianFlow};
    use crate::quantum::{Branch, DrivenHamiltonian};
    use approx::assert_abs_diff_eq;

    const HBAR: f64 = 0.1;

    fn l0() -> InitialGaussianDensity {
        InitialGaussianDensity::minimum_uncertainty(6.0, 0.0, (HBAR / 2.0).sqrt(), HBAR).unwrap()
    }

    fn forks(h: DrivenHamiltonian, prep: f64) -> (ForkedFlow, ForkedFlow) {
        let base = HamiltonianFlow::with_horizon(h, 0.005, 40.0).unwrap();
        (
            ForkedFlow::new(&base, Branch::Plus, prep),
            ForkedFlow::new(&base, Branch::Minus, prep),
        )
    }

    #[test]
    fn initial_overlap_is_one() {
        let (p, m) = forks(DrivenHamiltonian::chaotic(), 0.0);
        let bx = PhaseBox::initial_support(&l0()).widened(0.05);
        for method in [OverlapMethod::Pullback, OverlapMethod::Box(bx)] {
            let o = classical_overlap(&p, &m, &l0(), 0.0, &method, 128, HBAR).unwrap();
            assert_abs_diff_eq!(o, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn identical_branches_keep_unit_overlap() {
        let h = DrivenHamiltonian {
            epsilon: 0.0,
            ..DrivenHamiltonian::chaotic()
        };
        let (p, m) = forks(h, 3.0);
        let times = [3.5, 4.0, 5.0];
        let series = pullback_overlap_series(&p, &m, &l0(), &times, 96, HBAR, None).unwrap();
        for o in series {
            assert_abs_diff_eq!(o, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn branch_exchange_is_exact() {
        let (p, m) = forks(DrivenHamiltonian::chaotic(), 4.0);
        let t = 5.0;
        let a = classical_overlap(&p, &m, &l0(), t, &OverlapMethod::Pullback, 64, HBAR).unwrap();
        let b = classical_overlap(&m, &p, &l0(), t, &OverlapMethod::Pullback, 64, HBAR).unwrap();
        assert!((a - b).abs() < 1e-12);
        let bx = pilot_box(&[&p, &m], &l0(), t, 2000, 0.1, 1).unwrap();
        let a = classical_overlap(&p, &m, &l0(), t, &OverlapMethod::Box(bx), 64, HBAR).unwrap();
        let b = classical_overlap(&m, &p, &l0(), t, &OverlapMethod::Box(bx), 64, HBAR).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn box_and_pullback_agree() {
        let (p, m) = forks(DrivenHamiltonian::chaotic(), 3.0);
        let t = 4.0;
        let bx = pilot_box(&[&p, &m], &l0(), t, 10_000, 0.1, 7).unwrap();
        let boxed = classical_overlap(&p, &m, &l0(), t, &OverlapMethod::Box(bx), 256, HBAR).unwrap();
        let pulled = classical_overlap(&p, &m, &l0(), t, &OverlapMethod::Pullback, 128, HBAR).unwrap();
        assert!((boxed - pulled).abs() < 1e-3, "box {boxed} pullback {pulled}");
        assert!(pulled < 1.0);
    }

    #[test]
    fn series_matches_pointwise_evaluation() {
        let (p, m) = forks(DrivenHamiltonian::chaotic(), 2.0);
        let times = [2.5, 3.0, 3.5];
        let series = pullback_overlap_series(&p, &m, &l0(), &times, 48, HBAR, None).unwrap();
        for (t, s) in times.iter().zip(&series) {
            let o = classical_overlap(&p, &m, &l0(), *t, &OverlapMethod::Pullback, 48, HBAR).unwrap();
            assert!((o - s).abs() < 1e-9);
        }
    }

    #[test]
    fn series_stops_below_threshold() {
        let (p, m) = forks(DrivenHamiltonian::chaotic(), 2.0);
        let times: Vec<f64> = (1..=60).map(|k| 2.0 + 0.5 * k as f64).collect();
        let series = pullback_overlap_series(&p, &m, &l0(), &times, 32, HBAR, Some(0.95)).unwrap();
        assert!(series.len() < times.len());
        assert!(*series.last().unwrap() <= 0.95);
    }

    #[test]
    fn small_box_reports_escape() {
        let (p, m) = forks(DrivenHamiltonian::chaotic(), 0.0);
        let tight = PhaseBox::new(5.9, 6.1, -0.1, 0.1).unwrap();
        assert!(matches!(
            classical_overlap(&p, &m, &l0(), 1.0, &OverlapMethod::Box(tight), 32, HBAR),
            Err(Error::SupportEscape(_))
        ));
    }

    #[test]
    fn liouville_mass_is_conserved() {
        // later times fold the density into filaments finer than this lattice
        let base = HamiltonianFlow::with_horizon(DrivenHamiltonian::chaotic(), 0.005, 8.0).unwrap();
        for t in [5.0, 8.0] {
            let bx = pilot_box(&[&base], &l0(), t, 10_000, 0.1, 3).unwrap();
            let mass = transported_mass(&base, &l0(), t, &bx, 512).unwrap();
            assert!((mass - 1.0).abs() < 1e-4, "t = {t}: mass {mass}");
        }
    }
}
