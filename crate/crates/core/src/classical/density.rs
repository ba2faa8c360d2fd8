use serde::{Deserialize, Serialize};

use super::flow::{Flow, PhaseSpacePoint};
use crate::error::{Error, Result};

/// Normalized phase-space Gaussian
/// `L0 = exp(−(x−x0)²/2σx² − (p−p0)²/2σp²) / (2π σx σp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialGaussianDensity {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
}

impl InitialGaussianDensity {
    pub fn new(x0: f64, p0: f64, sigma_x: f64, sigma_p: f64) -> Result<Self> {
        if !(x0.is_finite() && p0.is_finite()) {
            return Err(Error::param("center", "must be finite"));
        }
        for (name, s) in [("sigma_x", sigma_x), ("sigma_p", sigma_p)] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {s}")));
            }
        }
        Ok(Self {
            x0,
            p0,
            sigma_x,
            sigma_p,
        })
    }

    /// Classical counterpart of a minimum-uncertainty packet, `σx σp = ħ/2`.
    /// Its self-overlap `2πħ∫L0²` is exactly one.
    pub fn minimum_uncertainty(x0: f64, p0: f64, sigma_x: f64, hbar: f64) -> Result<Self> {
        Self::new(x0, p0, sigma_x, hbar / (2.0 * sigma_x))
    }

    /// `(x−x0)²/2σx² + (p−p0)²/2σp²`.
    pub fn exponent(&self, z: PhaseSpacePoint) -> f64 {
        let u = (z.x - self.x0) / self.sigma_x;
        let v = (z.p - self.p0) / self.sigma_p;
        0.5 * (u * u + v * v)
    }

    pub fn peak(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.sigma_x * self.sigma_p)
    }

    pub fn value(&self, z: PhaseSpacePoint) -> f64 {
        self.peak() * (-self.exponent(z)).exp()
    }
}

/// Liouville-evolved density: the initial density read at the foot of the
/// backward characteristic through `(z, t)`.
pub fn density_at<F: Flow + ?Sized>(z: PhaseSpacePoint, t: f64, flow: &F, l0: &InitialGaussianDensity) -> Result<f64> {
    Ok(l0.value(flow.map(z, t, 0.0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::flow::HamiltonianFlow;
    use crate::quantum::DrivenHamiltonian;
    use approx::assert_abs_diff_eq;

    fn harmonic() -> HamiltonianFlow {
        let h = DrivenHamiltonian {
            kappa: 0.0,
            ..DrivenHamiltonian::chaotic()
        };
        HamiltonianFlow::new(h, 0.005).unwrap()
    }

    #[test]
    fn initial_time_reads_l0() {
        let l0 = InitialGaussianDensity::new(1.0, -0.5, 0.3, 0.2).unwrap();
        let z = PhaseSpacePoint::new(1.2, -0.4);
        assert_eq!(density_at(z, 0.0, &harmonic(), &l0).unwrap(), l0.value(z));
    }

    #[test]
    fn centred_isotropic_density_is_stationary() {
        // σp = mω σx makes the Gaussian round in the oscillator's own units
        let l0 = InitialGaussianDensity::new(0.0, 0.0, 1.0, 0.1).unwrap();
        let flow = harmonic();
        for t in [5.0, 17.0, 40.0] {
            assert_abs_diff_eq!(
                density_at(PhaseSpacePoint::default(), t, &flow, &l0).unwrap(),
                l0.peak(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn offset_density_rotates_rigidly() {
        let l0 = InitialGaussianDensity::new(2.0, 0.0, 0.5, 0.05).unwrap();
        let flow = harmonic();
        let w: f64 = 0.1;
        for t in [3.0, 11.0, 25.0] {
            let (s, c) = (w * t).sin_cos();
            // centre of the rotated density
            let z = PhaseSpacePoint::new(2.0 * c, -2.0 * w * s);
            assert_abs_diff_eq!(
                density_at(z, t, &flow, &l0).unwrap(),
                l0.peak(),
                epsilon = 1e-6 * l0.peak()
            );
            let off = PhaseSpacePoint::new(z.x + 0.5 * c, z.p - 0.5 * w * s);
            let expected = l0.value(PhaseSpacePoint::new(2.5, 0.0));
            assert_abs_diff_eq!(
                density_at(off, t, &flow, &l0).unwrap(),
                expected,
                epsilon = 1e-6 * l0.peak()
            );
        }
    }

    #[test]
    fn minimum_uncertainty_self_overlap_is_one() {
        let hbar = 0.1;
        let l0 = InitialGaussianDensity::minimum_uncertainty(0.0, 0.0, 0.2, hbar).unwrap();
        // 2πħ ∫ L0² = 2πħ / (4π σx σp)
        let analytic = 2.0 * std::f64::consts::PI * hbar * l0.peak() / 2.0;
        assert_abs_diff_eq!(analytic, 1.0, epsilon = 1e-14);
    }
}
