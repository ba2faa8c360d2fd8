use super::flow::PhaseSpacePoint;
use crate::error::{Error, Result};
use crate::quantum::DrivenHamiltonian;

/// Interval between tangent-vector renormalizations.
pub const RENORMALIZATION_INTERVAL: f64 = 1.0;

/// Largest Lyapunov exponent along the orbit of `z0` over `[0, t_max]`.
///
/// The tangent vector is propagated with the exact linearization of the
/// leapfrog step and rescaled to unit length every
/// [`RENORMALIZATION_INTERVAL`].
pub fn lyapunov_estimate(z0: PhaseSpacePoint, t_max: f64, hamiltonian: &DrivenHamiltonian, dt: f64) -> Result<f64> {
    hamiltonian.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if !(t_max.is_finite() && t_max >= RENORMALIZATION_INTERVAL) {
        return Err(Error::param(
            "t_max",
            format!("must cover at least one renormalization interval, got {t_max}"),
        ));
    }
    let intervals = (t_max / RENORMALIZATION_INTERVAL).floor() as usize;
    let steps = (RENORMALIZATION_INTERVAL / dt).ceil() as usize;
    let h = RENORMALIZATION_INTERVAL / steps as f64;
    let hm = hamiltonian;
    let (mut x, mut p) = (z0.x, z0.p);
    let (mut u, mut v) = (1.0_f64, 0.0_f64);
    let mut log_sum = 0.0;
    for k in 0..intervals {
        let t0 = k as f64 * RENORMALIZATION_INTERVAL;
        for i in 0..steps {
            let t = t0 + i as f64 * h;
            v += 0.5 * h * hm.force_gradient(x, t) * u;
            p += 0.5 * h * hm.force(x, t);
            x += h * p / hm.m;
            u += h * v / hm.m;
            v += 0.5 * h * hm.force_gradient(x, t + h) * u;
            p += 0.5 * h * hm.force(x, t + h);
        }
        let norm = u.hypot(v);
        if !(norm.is_finite() && x.is_finite() && p.is_finite()) || norm == 0.0 {
            return Err(Error::Divergence(t0 + RENORMALIZATION_INTERVAL));
        }
        log_sum += norm.ln();
        u /= norm;
        v /= norm;
    }
    Ok(log_sum / (intervals as f64 * RENORMALIZATION_INTERVAL))
}
