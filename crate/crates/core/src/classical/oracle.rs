use serde::{Deserialize, Serialize};

use super::density::InitialGaussianDensity;
use super::flow::{Flow, PhaseSpacePoint};
use crate::error::{Error, Result};

/// Two isotropic Gaussians of width `σ` that drift apart at velocity `v`
/// while being squeezed along `x` and stretched along `p` at rate `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchedGaussianParams {
    pub lambda: f64,
    pub sigma: f64,
    pub v: (f64, f64),
}

impl StretchedGaussianParams {
    pub fn new(lambda: f64, sigma: f64, v: (f64, f64)) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be non-negative, got {lambda}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !(v.0.is_finite() && v.1.is_finite()) {
            return Err(Error::param("v", "must be finite"));
        }
        Ok(Self { lambda, sigma, v })
    }

    /// The `ħ` that makes `2πħ∫L0² = 1` for an isotropic Gaussian of width σ.
    pub fn hbar(&self) -> f64 {
        2.0 * self.sigma * self.sigma
    }

    pub fn initial_density(&self) -> InitialGaussianDensity {
        InitialGaussianDensity {
            x0: 0.0,
            p0: 0.0,
            sigma_x: self.sigma,
            sigma_p: self.sigma,
        }
    }

    /// Linear flows realising the two drifting densities, moving at `±v/2`.
    pub fn flows(&self) -> (LinearStretchFlow, LinearStretchFlow) {
        let half = (0.5 * self.v.0, 0.5 * self.v.1);
        (
            LinearStretchFlow {
                lambda: self.lambda,
                velocity: half,
            },
            LinearStretchFlow {
                lambda: self.lambda,
                velocity: (-half.0, -half.1),
            },
        )
    }
}

/// `exp(−(v_x t e^{λt}/2σ)²)·exp(−(v_p t e^{−λt}/2σ)²)`.
pub fn stretched_gaussian_overlap(params: &StretchedGaussianParams, t: f64) -> f64 {
    let grow = (params.lambda * t).exp();
    let a = params.v.0 * t * grow / (2.0 * params.sigma);
    let b = params.v.1 * t / grow / (2.0 * params.sigma);
    (-a * a).exp() * (-b * b).exp()
}

/// Area-preserving linear flow about a centre moving at constant velocity
/// from the origin: offsets shrink as `e^{−λt}` in `x` and grow as `e^{λt}`
/// in `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearStretchFlow {
    pub lambda: f64,
    pub velocity: (f64, f64),
}

impl LinearStretchFlow {
    fn center(&self, t: f64) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.velocity.0 * t, self.velocity.1 * t)
    }
}

impl Flow for LinearStretchFlow {
    fn map(&self, z: PhaseSpacePoint, t0: f64, t1: f64) -> Result<PhaseSpacePoint> {
        let (c0, c1) = (self.center(t0), self.center(t1));
        let g = (self.lambda * (t1 - t0)).exp();
        let out = PhaseSpacePoint::new(c1.x + (z.x - c0.x) / g, c1.p + (z.p - c0.p) * g);
        if !out.is_finite() {
            return Err(Error::Divergence(t1));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_examples() {
        let p = StretchedGaussianParams::new(1.0, 1.0, (0.01, 0.0)).unwrap();
        assert_eq!(stretched_gaussian_overlap(&p, 0.0), 1.0);
        let v = stretched_gaussian_overlap(&p, 5.0);
        assert_abs_diff_eq!(v, (-(0.01_f64 * 5.0 * 5f64.exp() / 2.0).powi(2)).exp(), epsilon = 1e-18);
        assert!((v - 1.05e-6).abs() < 0.01e-6, "{v}");
        let still = StretchedGaussianParams::new(0.7, 0.4, (0.0, 0.0)).unwrap();
        for t in [0.0, 1.0, 9.0] {
            assert_eq!(stretched_gaussian_overlap(&still, t), 1.0);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(StretchedGaussianParams::new(-1.0, 1.0, (0.0, 0.0)).is_err());
        assert!(StretchedGaussianParams::new(1.0, 0.0, (0.0, 0.0)).is_err());
    }

    #[test]
    fn linear_flow_composes_and_inverts() {
        let f = LinearStretchFlow {
            lambda: 0.8,
            velocity: (0.3, -0.2),
        };
        let z = PhaseSpacePoint::new(0.4, 1.1);
        let direct = f.map(z, 0.5, 3.0).unwrap();
        let staged = f.map(f.map(z, 0.5, 1.7).unwrap(), 1.7, 3.0).unwrap();
        assert!(direct.distance(&staged) < 1e-12);
        assert!(f.map(direct, 3.0, 0.5).unwrap().distance(&z) < 1e-12);
    }
}
