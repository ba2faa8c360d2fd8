use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the three Hamiltonians of the fork protocol is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Unperturbed preparation dynamics.
    Base,
    /// Harmonic well centred at `x = −ε`.
    Plus,
    /// Harmonic well centred at `x = +ε`.
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Base => 0.0,
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Branch {
        match self {
            Branch::Base => Branch::Base,
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// Driven particle in a moving cosine lattice plus a harmonic trap,
///
/// `H = p²/2m − κ·cos(x − l·sin t) + a·(x + s·ε)²/2`,
///
/// with `s ∈ {0, +1, −1}` selected by [`Branch`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivenHamiltonian {
    pub m: f64,
    pub kappa: f64,
    pub l: f64,
    pub a: f64,
    pub epsilon: f64,
    pub branch: Branch,
}

impl Default for DrivenHamiltonian {
    fn default() -> Self {
        Self::chaotic()
    }
}

impl DrivenHamiltonian {
    /// Parameters for which the stroboscopic map shows four islands in a
    /// chaotic sea: `m = 1, κ = 0.36, l = 3.8, a = 0.01, ε = 0.5`.
    pub fn chaotic() -> Self {
        Self {
            m: 1.0,
            kappa: 0.36,
            l: 3.8,
            a: 0.01,
            epsilon: 0.5,
            branch: Branch::Base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::param("m", format!("mass must be positive, got {}", self.m)));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("l", self.l),
            ("a", self.a),
            ("epsilon", self.epsilon),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn with_branch(self, branch: Branch) -> Self {
        Self { branch, ..self }
    }

    /// Centre offset of the harmonic term, `s·ε`.
    #[inline]
    pub fn shift(&self) -> f64 {
        self.branch.sign() * self.epsilon
    }

    /// Lattice displacement `l·sin t`.
    #[inline]
    pub fn drive(&self, t: f64) -> f64 {
        self.l * t.sin()
    }

    #[inline]
    pub fn potential(&self, x: f64, t: f64) -> f64 {
        let y = x + self.shift();
        -self.kappa * (x - self.drive(t)).cos() + 0.5 * self.a * y * y
    }

    /// `−∂V/∂x` at `(x, t)`.
    #[inline]
    pub fn force(&self, x: f64, t: f64) -> f64 {
        self.force_with_drive(x, self.drive(t))
    }

    /// Force for a precomputed lattice displacement.
    #[inline]
    pub fn force_with_drive(&self, x: f64, drive: f64) -> f64 {
        -self.kappa * (x - drive).sin() - self.a * (x + self.shift())
    }

    /// `∂F/∂x`, used for tangent-map propagation.
    #[inline]
    pub fn force_gradient(&self, x: f64, t: f64) -> f64 {
        -self.kappa * (x - self.drive(t)).cos() - self.a
    }

    pub fn energy(&self, x: f64, p: f64, t: f64) -> f64 {
        p * p / (2.0 * self.m) + self.potential(x, t)
    }

    /// `H₊ − H₋ = 2aεx`, the perturbation switched on at the fork.
    #[inline]
    pub fn perturbation(&self, x: f64) -> f64 {
        2.0 * self.a * self.epsilon * x
    }

    /// Standard deviation of the perturbation in a state with position spread
    /// `spread_x` (exact, since the perturbation is linear in `x`).
    #[inline]
    pub fn perturbation_spread(&self, spread_x: f64) -> f64 {
        (2.0 * self.a * self.epsilon).abs() * spread_x
    }

    /// Angular frequency of the bare harmonic trap, `√(a/m)`.
    pub fn harmonic_frequency(&self) -> f64 {
        (self.a / self.m).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn base_potential_at_origin() {
        let h = DrivenHamiltonian::chaotic();
        assert_abs_diff_eq!(h.potential(0.0, 0.0), -0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(h.potential(0.0, FRAC_PI_2), -0.36 * (-3.8_f64).cos(), epsilon = 1e-15);
    }

    #[test]
    fn branch_difference_is_linear_perturbation() {
        let h = DrivenHamiltonian::chaotic();
        let plus = h.with_branch(Branch::Plus);
        let minus = h.with_branch(Branch::Minus);
        assert_abs_diff_eq!(
            plus.potential(1.0, 0.3) - minus.potential(1.0, 0.3),
            0.01,
            epsilon = 1e-15
        );
        for i in 0..200 {
            let x = -20.0 + 0.2 * i as f64;
            let t = 0.37 * i as f64;
            let diff = plus.potential(x, t) - minus.potential(x, t);
            assert_abs_diff_eq!(diff, h.perturbation(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn base_branch_ignores_epsilon() {
        let h = DrivenHamiltonian {
            epsilon: 3.0,
            ..DrivenHamiltonian::chaotic()
        };
        assert_eq!(h.potential(1.5, 2.0), DrivenHamiltonian::chaotic().potential(1.5, 2.0));
    }

    #[test]
    fn force_is_negative_gradient() {
        let h = DrivenHamiltonian::chaotic().with_branch(Branch::Minus);
        let e = 1e-6;
        for &(x, t) in &[(0.3, 0.1), (-4.0, 2.0), (7.5, 11.0)] {
            let fd = -(h.potential(x + e, t) - h.potential(x - e, t)) / (2.0 * e);
            assert_abs_diff_eq!(h.force(x, t), fd, epsilon = 1e-8);
            let gd = (h.force(x + e, t) - h.force(x - e, t)) / (2.0 * e);
            assert_abs_diff_eq!(h.force_gradient(x, t), gd, epsilon = 1e-8);
        }
    }
}
