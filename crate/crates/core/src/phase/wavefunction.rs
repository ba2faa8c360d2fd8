use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::SpatialGrid;
use super::spectral::Spectral;
use crate::error::{Error, Result};

/// Width of the margin, in units of the packet spread, that a constructed
/// state must keep from the grid edges (in both position and momentum).
pub const SUPPORT_MARGIN: f64 = 6.0;

/// Largest admissible ratio of edge density to peak density.
pub const BOUNDARY_RATIO_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Position => "position",
            Representation::Momentum => "momentum",
        }
    }
}

/// Complex amplitudes on a [`SpatialGrid`].
///
/// In the position representation `Σ|ψ_j|²·dx = 1`; in the momentum
/// representation the amplitudes are indexed by ascending momentum and
/// `Σ|ψ̃_k|²·dp = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
    representation: Representation,
}

/// First and second moments of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub spread_x: f64,
    pub spread_p: f64,
}

impl Moments {
    pub fn uncertainty_product(&self) -> f64 {
        self.spread_x * self.spread_p
    }
}

impl Wavefunction {
    pub fn from_amplitudes(
        grid: SpatialGrid,
        amplitudes: Vec<Complex64>,
        representation: Representation,
    ) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            amplitudes,
            representation,
        })
    }

    /// Samples `f` at the grid positions and normalizes the result.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitudes = grid.positions().into_iter().map(f).collect();
        let mut psi = Self {
            grid,
            amplitudes,
            representation: Representation::Position,
        };
        psi.normalize()?;
        Ok(psi)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    fn measure(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.dp(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::param("amplitudes", "state has zero or non-finite norm"));
        }
        let inv = 1.0 / norm;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// Probability density in the current representation.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Ratio of the larger edge density to the peak density.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.amplitudes.iter().map(|a| a.norm_sqr()).fold(0.0_f64, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let first = self.amplitudes[0].norm_sqr();
        let last = self.amplitudes[self.amplitudes.len() - 1].norm_sqr();
        first.max(last) / peak
    }

    /// Fails if the state has reached the edges of the grid in either
    /// position or momentum.
    pub fn check_confined(&self, time: f64) -> Result<()> {
        let (pos, mom) = match self.representation {
            Representation::Position => (self.boundary_ratio(), self.to_momentum_space()?.boundary_ratio()),
            Representation::Momentum => (self.to_position_space()?.boundary_ratio(), self.boundary_ratio()),
        };
        let ratio = pos.max(mom);
        if ratio > BOUNDARY_RATIO_LIMIT || !ratio.is_finite() {
            return Err(Error::BoundaryLeak { ratio, time });
        }
        Ok(())
    }

    fn expect(&self, representation: Representation) -> Result<()> {
        if self.representation != representation {
            return Err(Error::Representation {
                expected: representation.name(),
                found: self.representation.name(),
            });
        }
        Ok(())
    }

    /// Unitary discrete Fourier transform to the momentum representation.
    pub fn to_momentum_space(&self) -> Result<Wavefunction> {
        self.expect(Representation::Position)?;
        let mut spectral = Spectral::new(self.grid.n_points());
        Ok(self.to_momentum_with(&mut spectral))
    }

    pub(crate) fn to_momentum_with(&self, spectral: &mut Spectral) -> Wavefunction {
        let g = &self.grid;
        let n = g.n_points();
        let mut buf = self.amplitudes.clone();
        spectral.forward(&mut buf);
        let scale = g.dx() / (2.0 * PI * g.hbar()).sqrt();
        let amplitudes = (0..n)
            .map(|k| {
                let p = g.p(k);
                let phase = Complex64::from_polar(scale, -p * g.x_min() / g.hbar());
                buf[(k + n / 2) % n] * phase
            })
            .collect();
        Wavefunction {
            grid: self.grid,
            amplitudes,
            representation: Representation::Momentum,
        }
    }

    /// Inverse of [`Wavefunction::to_momentum_space`].
    pub fn to_position_space(&self) -> Result<Wavefunction> {
        self.expect(Representation::Momentum)?;
        let g = &self.grid;
        let n = g.n_points();
        let scale = g.dp() / (2.0 * PI * g.hbar()).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (k, a) in self.amplitudes.iter().enumerate() {
            let p = g.p(k);
            buf[(k + n / 2) % n] = a * Complex64::from_polar(scale, p * g.x_min() / g.hbar());
        }
        Spectral::new(n).inverse(&mut buf);
        Ok(Wavefunction {
            grid: self.grid,
            amplitudes: buf,
            representation: Representation::Position,
        })
    }

    /// Multiplies by `exp(i·δp·x/ħ)`, shifting the state by `δp` in momentum.
    pub fn boost(&self, delta_p: f64) -> Result<Wavefunction> {
        self.expect(Representation::Position)?;
        let g = self.grid;
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a * Complex64::from_polar(1.0, delta_p * g.x(j) / g.hbar()))
            .collect();
        Ok(Wavefunction {
            grid: g,
            amplitudes,
            representation: Representation::Position,
        })
    }

    /// Spectral translation by `δx` in position (exact for band-limited states).
    pub fn translate(&self, delta_x: f64) -> Result<Wavefunction> {
        let mut mom = self.to_momentum_space()?;
        let g = self.grid;
        for (k, a) in mom.amplitudes.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, -g.p(k) * delta_x / g.hbar());
        }
        mom.to_position_space()
    }

    /// Position mean and spread; cheap, no transform needed.
    pub fn position_moments(&self) -> Result<(f64, f64)> {
        self.expect(Representation::Position)?;
        Ok(weighted_moments(&self.amplitudes, |j| self.grid.x(j), self.grid.dx()))
    }

    pub fn moments(&self) -> Result<Moments> {
        let (pos, mom) = match self.representation {
            Representation::Position => (self.clone(), self.to_momentum_space()?),
            Representation::Momentum => (self.to_position_space()?, self.clone()),
        };
        let g = &self.grid;
        let (mean_x, spread_x) = weighted_moments(&pos.amplitudes, |j| g.x(j), g.dx());
        let (mean_p, spread_p) = weighted_moments(&mom.amplitudes, |k| g.p(k), g.dp());
        Ok(Moments {
            mean_x,
            mean_p,
            spread_x,
            spread_p,
        })
    }
}

fn weighted_moments(amps: &[Complex64], coord: impl Fn(usize) -> f64, measure: f64) -> (f64, f64) {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        let w = a.norm_sqr();
        let c = coord(i);
        m0 += w;
        m1 += w * c;
        m2 += w * c * c;
    }
    m0 *= measure;
    let mean = m1 * measure / m0;
    let var = (m2 * measure / m0 - mean * mean).max(0.0);
    (mean, var.sqrt())
}

/// Normalized minimum-uncertainty Gaussian with position spread `sigma_x`
/// centered at `(x0, p0)`.
pub fn gaussian_wavepacket(grid: &SpatialGrid, x0: f64, p0: f64, sigma_x: f64) -> Result<Wavefunction> {
    if !(sigma_x.is_finite() && sigma_x > 0.0) {
        return Err(Error::param("sigma_x", format!("must be positive, got {sigma_x}")));
    }
    check_support(grid, x0, p0, sigma_x)?;
    let hbar = grid.hbar();
    Wavefunction::from_fn(*grid, |x| {
        let u = x - x0;
        Complex64::from_polar((-u * u / (4.0 * sigma_x * sigma_x)).exp(), p0 * u / hbar)
    })
}

pub(crate) fn check_support(grid: &SpatialGrid, x0: f64, p0: f64, sigma_x: f64) -> Result<()> {
    let sigma_p = grid.hbar() / (2.0 * sigma_x);
    let reach_x = SUPPORT_MARGIN * sigma_x;
    let reach_p = SUPPORT_MARGIN * sigma_p;
    if x0 - reach_x < grid.x_min() || x0 + reach_x > grid.x_max() {
        return Err(Error::SupportClipped(format!(
            "x0 = {x0} ± {reach_x:.4} outside [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    if p0.abs() + reach_p > grid.p_max() {
        return Err(Error::SupportClipped(format!(
            "p0 = {p0} ± {reach_p:.4} beyond p_max = {:.4}",
            grid.p_max()
        )));
    }
    Ok(())
}

/// `⟨ψ1|ψ2⟩` with the grid measure of the shared representation.
pub fn inner_product(psi1: &Wavefunction, psi2: &Wavefunction) -> Result<Complex64> {
    if psi1.grid != psi2.grid {
        return Err(Error::GridMismatch);
    }
    psi2.expect(psi1.representation)?;
    let sum: Complex64 = psi1
        .amplitudes
        .iter()
        .zip(&psi2.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(sum * psi1.measure())
}

/// `|⟨ψ1|ψ2⟩|²`.
pub fn overlap(psi1: &Wavefunction, psi2: &Wavefunction) -> Result<f64> {
    inner_product(psi1, psi2).map(|c| c.norm_sqr())
}
