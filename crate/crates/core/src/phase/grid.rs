use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic position grid together with its conjugate momentum grid.
///
/// Positions are `x_j = x_min + j·dx` for `j = 0..n_points`; the momentum grid
/// is stored in ascending order, `p_k = (k − n/2)·dp`, spanning `[−πħ/dx, πħ/dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    n_points: usize,
    x_min: f64,
    x_max: f64,
    hbar: f64,
}

impl SpatialGrid {
    pub fn new(n_points: usize, x_min: f64, x_max: f64, hbar: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::GridSize(n_points));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::DegenerateInterval { x_min, x_max });
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::NonPositiveHbar(hbar));
        }
        Ok(Self {
            n_points,
            x_min,
            x_max,
            hbar,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI * self.hbar / (self.n_points as f64 * self.dx())
    }

    /// Largest representable momentum magnitude, `πħ/dx`.
    pub fn p_max(&self) -> f64 {
        PI * self.hbar / self.dx()
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    /// Momentum of ascending-order index `k`.
    #[inline]
    pub fn p(&self, k: usize) -> f64 {
        (k as f64 - (self.n_points / 2) as f64) * self.dp()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.p(k)).collect()
    }

    /// Momenta in FFT storage order (`0, dp, …, −dp`).
    pub fn fft_momenta(&self) -> Vec<f64> {
        let n = self.n_points;
        let dp = self.dp();
        (0..n)
            .map(|m| {
                if m < n / 2 {
                    m as f64 * dp
                } else {
                    (m as f64 - n as f64) * dp
                }
            })
            .collect()
    }
}
