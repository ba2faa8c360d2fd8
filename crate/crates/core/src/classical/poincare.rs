use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::{Flow, HamiltonianFlow, PhaseSpacePoint};
use crate::error::{Error, Result};
use crate::quantum::DrivenHamiltonian;

const DRIVE_PERIOD: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareSample {
    pub seed_id: usize,
    pub n: usize,
    pub x: f64,
    pub p: f64,
}

impl PoincareSample {
    pub fn point(&self) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.x, self.p)
    }
}

/// Stroboscopic samples at `t = 2πn`, grouped by seed and ordered by `n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoincareCloud {
    samples: Vec<PoincareSample>,
}

impl PoincareCloud {
    pub fn samples(&self) -> &[PoincareSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn orbit(&self, seed_id: usize) -> impl Iterator<Item = PhaseSpacePoint> + '_ {
        self.samples
            .iter()
            .filter(move |s| s.seed_id == seed_id)
            .map(PoincareSample::point)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::harness::write_atomically(path, |w| {
            let mut out = csv::Writer::from_writer(w);
            for s in &self.samples {
                out.serialize(s).map_err(std::io::Error::other)?;
            }
            out.flush()
        })
    }
}

/// Iterates the one-period map `n_periods` times from each seed, keeping the
/// seed itself as iterate zero.
pub fn poincare_section(
    seeds: &[PhaseSpacePoint],
    n_periods: usize,
    hamiltonian: &DrivenHamiltonian,
    dt: f64,
) -> Result<PoincareCloud> {
    let flow = HamiltonianFlow::new(*hamiltonian, dt)?;
    let orbits: Vec<Vec<PoincareSample>> = seeds
        .par_iter()
        .enumerate()
        .map(|(seed_id, &z0)| {
            let mut z = z0;
            let mut orbit = Vec::with_capacity(n_periods + 1);
            orbit.push(PoincareSample {
                seed_id,
                n: 0,
                x: z.x,
                p: z.p,
            });
            for n in 1..=n_periods {
                z = flow.map(z, (n - 1) as f64 * DRIVE_PERIOD, n as f64 * DRIVE_PERIOD)?;
                orbit.push(PoincareSample {
                    seed_id,
                    n,
                    x: z.x,
                    p: z.p,
                });
            }
            Ok(orbit)
        })
        .collect::<Result<_>>()?;
    Ok(PoincareCloud {
        samples: orbits.into_iter().flatten().collect(),
    })
}

/// Fixed point of the stroboscopic map near `guess`, by Newton iteration with
/// a finite-difference Jacobian. Returns the point and the trace of the
/// monodromy matrix; `|trace| < 2` means the orbit sits in a stable island.
pub fn stroboscopic_fixed_point(
    guess: PhaseSpacePoint,
    hamiltonian: &DrivenHamiltonian,
    dt: f64,
) -> Result<(PhaseSpacePoint, f64)> {
    let flow = HamiltonianFlow::new(*hamiltonian, dt)?;
    let step = |z: PhaseSpacePoint| flow.map(z, 0.0, DRIVE_PERIOD);
    let h = 1e-6;
    let mut z = guess;
    for _ in 0..50 {
        let f = step(z)?;
        let (rx, rp) = (f.x - z.x, f.p - z.p);
        let fx = step(PhaseSpacePoint::new(z.x + h, z.p))?;
        let fp = step(PhaseSpacePoint::new(z.x, z.p + h))?;
        let m = [
            [(fx.x - f.x) / h, (fp.x - f.x) / h],
            [(fx.p - f.p) / h, (fp.p - f.p) / h],
        ];
        // residual Jacobian is M − I
        let (a, b, c, d) = (m[0][0] - 1.0, m[0][1], m[1][0], m[1][1] - 1.0);
        let det = a * d - b * c;
        if det.abs() < 1e-14 {
            return Err(Error::param("guess", "degenerate Jacobian in fixed-point search"));
        }
        let dx = (d * rx - b * rp) / det;
        let dp = (-c * rx + a * rp) / det;
        z = PhaseSpacePoint::new(z.x - dx, z.p - dp);
        if dx.hypot(dp) < 1e-11 {
            return Ok((z, m[0][0] + m[1][1]));
        }
    }
    Err(Error::param("guess", "fixed-point search did not converge"))
}
