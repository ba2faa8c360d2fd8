use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Branch, DrivenHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub p: f64,
}

impl PhaseSpacePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }

    pub fn distance(&self, other: &PhaseSpacePoint) -> f64 {
        (self.x - other.x).hypot(self.p - other.p)
    }
}

/// A deterministic map of phase space between two times.
pub trait Flow: Sync {
    /// Carries `z` from time `t0` to time `t1`; `t1 < t0` runs backwards.
    fn map(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> Result<PhaseSpacePoint>;
}

/// Kick-drift-kick leapfrog for a [`DrivenHamiltonian`].
///
/// An interval is split into `⌈|t1 − t0|/dt⌉` equal steps, so arbitrary end
/// times are hit exactly. When the steps are exactly `dt` long and start on
/// the lattice `k·dt`, the drive is read from a table instead of recomputed.
#[derive(Debug, Clone)]
pub struct HamiltonianFlow {
    hamiltonian: DrivenHamiltonian,
    dt: f64,
    drive_table: Arc<Vec<f64>>,
}

// |x| beyond this is treated as a blown-up trajectory
const DIVERGENCE_LIMIT: f64 = 1e8;

impl HamiltonianFlow {
    pub fn new(hamiltonian: DrivenHamiltonian, dt: f64) -> Result<Self> {
        Self::with_horizon(hamiltonian, dt, 0.0)
    }

    /// Like [`HamiltonianFlow::new`] but tabulates the drive on `[0, horizon]`.
    pub fn with_horizon(hamiltonian: DrivenHamiltonian, dt: f64, horizon: f64) -> Result<Self> {
        hamiltonian.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let n = if horizon > 0.0 {
            (horizon / dt).ceil() as usize + 1
        } else {
            0
        };
        let drive_table = (0..n).map(|k| hamiltonian.drive(k as f64 * dt)).collect();
        Ok(Self {
            hamiltonian,
            dt,
            drive_table: Arc::new(drive_table),
        })
    }

    pub fn hamiltonian(&self) -> &DrivenHamiltonian {
        &self.hamiltonian
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Same integrator and drive table for another branch.
    pub fn for_branch(&self, branch: Branch) -> Self {
        Self {
            hamiltonian: self.hamiltonian.with_branch(branch),
            ..self.clone()
        }
    }

    fn lattice_index(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 || (t - k * self.dt).abs() > 1e-9 * self.dt.max(t.abs()) {
            return None;
        }
        Some(k as usize)
    }

    fn integrate(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> PhaseSpacePoint {
        let span = t1 - t0;
        let n = (span.abs() / self.dt - 1e-9).ceil().max(0.0) as usize;
        if n == 0 {
            return z;
        }
        let h = span / n as f64;
        let hm = self.hamiltonian;
        let (mut x, mut p) = (z.x, z.p);
        let table = &self.drive_table;
        let on_lattice = (h.abs() - self.dt).abs() <= 1e-12 * self.dt;
        let k0 = if on_lattice { self.lattice_index(t0) } else { None };
        let k1 = k0.and_then(|_| self.lattice_index(t1));
        match (k0, k1) {
            (Some(k0), Some(k1)) if k0.max(k1) < table.len() => {
                let forward = k1 > k0;
                let idx = |i: usize| if forward { k0 + i } else { k0 - i };
                p += 0.5 * h * hm.force_with_drive(x, table[idx(0)]);
                for i in 1..=n {
                    x += h * p / hm.m;
                    let f = hm.force_with_drive(x, table[idx(i)]);
                    p += if i == n { 0.5 * h * f } else { h * f };
                }
            }
            _ => {
                p += 0.5 * h * hm.force(x, t0);
                for i in 1..=n {
                    x += h * p / hm.m;
                    let t = if i == n { t1 } else { t0 + i as f64 * h };
                    let f = hm.force(x, t);
                    p += if i == n { 0.5 * h * f } else { h * f };
                }
            }
        }
        PhaseSpacePoint { x, p }
    }
}

impl Flow for HamiltonianFlow {
    fn map(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> Result<PhaseSpacePoint> {
        let out = self.integrate(z, t0, t1);
        if !out.is_finite() || out.x.abs() > DIVERGENCE_LIMIT || out.p.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Divergence(t1));
        }
        Ok(out)
    }
}

/// Free function form of [`HamiltonianFlow`].
pub fn flow_map(
    z0: PhaseSpacePoint,
    t0: f64,
    t1: f64,
    hamiltonian: &DrivenHamiltonian,
    dt: f64,
) -> Result<PhaseSpacePoint> {
    HamiltonianFlow::new(*hamiltonian, dt)?.map(z0, t0, t1)
}

/// Base dynamics up to `switch_time`, then a perturbed branch.
#[derive(Debug, Clone)]
pub struct ForkedFlow {
    before: HamiltonianFlow,
    after: HamiltonianFlow,
    switch_time: f64,
}

impl ForkedFlow {
    pub fn new(base: &HamiltonianFlow, branch: Branch, switch_time: f64) -> Self {
        Self {
            before: base.for_branch(Branch::Base),
            after: base.for_branch(branch),
            switch_time,
        }
    }

    pub fn switch_time(&self) -> f64 {
        self.switch_time
    }
}

impl Flow for ForkedFlow {
    fn map(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> Result<PhaseSpacePoint> {
        let s = self.switch_time;
        let pick = |a: f64, b: f64| if a <= s && b <= s { &self.before } else { &self.after };
        if (t0 - s) * (t1 - s) < 0.0 {
            let mid = pick(t0, s).map(z, t0, s)?;
            pick(s, t1).map(mid, s, t1)
        } else {
            pick(t0, t1).map(z, t0, t1)
        }
    }
}
