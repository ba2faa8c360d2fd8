use num_complex::Complex64;

use super::hamiltonian::DrivenHamiltonian;
use crate::error::{Error, Result};
use crate::phase::{Representation, SpatialGrid, Spectral, Wavefunction, BOUNDARY_RATIO_LIMIT};

/// Second-order symmetric split-operator propagator for a [`DrivenHamiltonian`].
///
/// One step is `e^{−iK dt/2ħ} · e^{−iV(t+dt/2) dt/ħ} · e^{−iK dt/2ħ}`. Consecutive
/// half kinetic factors are fused when several steps are taken in a row.
#[derive(Debug, Clone)]
pub struct SplitOperator {
    grid: SpatialGrid,
    hamiltonian: DrivenHamiltonian,
    dt: f64,
    spectral: Spectral,
    // kinetic factors in FFT order with the 1/n of the inverse transform folded in
    kinetic_half: Vec<Complex64>,
    kinetic_full: Vec<Complex64>,
    // e^{−i a(x+sε)²/2 · dt/ħ}
    harmonic_phase: Vec<Complex64>,
    cos_x: Vec<f64>,
    sin_x: Vec<f64>,
}

impl SplitOperator {
    pub fn new(grid: SpatialGrid, hamiltonian: DrivenHamiltonian, dt: f64) -> Result<Self> {
        hamiltonian.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let hbar = grid.hbar();
        let n = grid.n_points();
        let inv_n = 1.0 / n as f64;
        let kin = |p: f64, tau: f64| Complex64::from_polar(inv_n, -p * p / (2.0 * hamiltonian.m) * tau / hbar);
        let momenta = grid.fft_momenta();
        let kinetic_half = momenta.iter().map(|&p| kin(p, 0.5 * dt)).collect();
        let kinetic_full = momenta.iter().map(|&p| kin(p, dt)).collect();
        let xs = grid.positions();
        let shift = hamiltonian.shift();
        let harmonic_phase = xs
            .iter()
            .map(|&x| {
                let y = x + shift;
                Complex64::from_polar(1.0, -0.5 * hamiltonian.a * y * y * dt / hbar)
            })
            .collect();
        Ok(Self {
            grid,
            hamiltonian,
            dt,
            spectral: Spectral::new(n),
            kinetic_half,
            kinetic_full,
            harmonic_phase,
            cos_x: xs.iter().map(|x| x.cos()).collect(),
            sin_x: xs.iter().map(|x| x.sin()).collect(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn hamiltonian(&self) -> &DrivenHamiltonian {
        &self.hamiltonian
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    fn apply_potential(&self, amps: &mut [Complex64], t_mid: f64) {
        // −κcos(x − d) = −κ(cos x cos d + sin x sin d)
        let d = self.hamiltonian.drive(t_mid);
        let (sd, cd) = d.sin_cos();
        let c = self.hamiltonian.kappa * self.dt / self.grid.hbar();
        for (j, a) in amps.iter_mut().enumerate() {
            let cosine = self.cos_x[j] * cd + self.sin_x[j] * sd;
            *a *= self.harmonic_phase[j] * Complex64::from_polar(1.0, c * cosine);
        }
    }

    fn multiply(amps: &mut [Complex64], factors: &[Complex64]) {
        amps.iter_mut().zip(factors).for_each(|(a, f)| *a *= f);
    }

    /// Takes `steps` consecutive steps starting at absolute time `t0`.
    ///
    /// Fails if the state reaches the position edges of the grid.
    pub fn advance(&mut self, psi: &mut Wavefunction, t0: f64, steps: usize) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if psi.representation() != Representation::Position {
            return Err(Error::Representation {
                expected: Representation::Position.name(),
                found: psi.representation().name(),
            });
        }
        if steps == 0 {
            return Ok(());
        }
        let kinetic_half = std::mem::take(&mut self.kinetic_half);
        let kinetic_full = std::mem::take(&mut self.kinetic_full);
        let amps = psi.amplitudes_mut();
        self.spectral.forward(amps);
        Self::multiply(amps, &kinetic_half);
        for i in 0..steps {
            self.spectral.inverse(amps);
            self.apply_potential(amps, t0 + (i as f64 + 0.5) * self.dt);
            self.spectral.forward(amps);
            let k = if i + 1 == steps { &kinetic_half } else { &kinetic_full };
            Self::multiply(amps, k);
        }
        self.spectral.inverse(amps);
        self.kinetic_half = kinetic_half;
        self.kinetic_full = kinetic_full;
        let ratio = psi.boundary_ratio();
        if ratio > BOUNDARY_RATIO_LIMIT || !ratio.is_finite() {
            return Err(Error::BoundaryLeak {
                ratio,
                time: t0 + steps as f64 * self.dt,
            });
        }
        Ok(())
    }
}

/// One symmetric split-operator step of length `dt` starting at time `t`.
pub fn split_operator_step(
    psi: &Wavefunction,
    hamiltonian: &DrivenHamiltonian,
    t: f64,
    dt: f64,
) -> Result<Wavefunction> {
    let mut prop = SplitOperator::new(*psi.grid(), *hamiltonian, dt)?;
    let mut out = psi.clone();
    prop.advance(&mut out, t, 1)?;
    Ok(out)
}
