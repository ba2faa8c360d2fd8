//! Uncertainty-principle bounds on overlap decay and the sub-Planck fringe scales.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::phase::Moments;

/// Accumulated phase `φ(τ) = (1/ħ)∫ΔV dτ'` and the bound `cos²φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub phi: Vec<f64>,
    /// `cos²φ` while `φ < π/2`, zero afterwards (the overlap is trivially
    /// nonnegative there).
    pub bound: Vec<f64>,
    /// Number of leading samples with `φ < π/2`.
    pub valid_len: usize,
}

impl BoundCurve {
    pub fn window_closed(&self) -> bool {
        self.valid_len < self.phi.len()
    }
}

/// Trapezoidal lower-bound curve from `ΔV` sampled every `step` time units.
pub fn lower_bound_curve(delta_v: &[f64], step: f64, hbar: f64) -> Result<BoundCurve> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::NonPositiveHbar(hbar));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::param("step", format!("must be positive, got {step}")));
    }
    if let Some(v) = delta_v.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::param("delta_v", format!("spread must be nonnegative, got {v}")));
    }
    let mut phi = Vec::with_capacity(delta_v.len());
    let mut acc = 0.0;
    for (k, &v) in delta_v.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * (delta_v[k - 1] + v) * step / hbar;
        }
        phi.push(acc);
    }
    let valid_len = phi.iter().take_while(|&&f| f < FRAC_PI_2).count();
    let bound = phi
        .iter()
        .enumerate()
        .map(|(k, f)| if k < valid_len { f.cos().powi(2) } else { 0.0 })
        .collect();
    Ok(BoundCurve { phi, bound, valid_len })
}

/// Lower bound `πħ / (2·ΔV̄)` on the decoherence time.
pub fn decoherence_bound(mean_delta_v: f64, hbar: f64) -> Result<f64> {
    if !(mean_delta_v.is_finite() && mean_delta_v > 0.0) {
        return Err(Error::param(
            "mean_delta_v",
            format!("spread must be positive, got {mean_delta_v}"),
        ));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::NonPositiveHbar(hbar));
    }
    Ok(PI * hbar / (2.0 * mean_delta_v))
}

/// Smallest Wigner-function structure supported by a state of given spreads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeScales {
    /// `ħ/ΔP`
    pub delta_x: f64,
    /// `ħ/ΔX`
    pub delta_p: f64,
    /// `ħ²/(ΔX·ΔP)`
    pub sub_planck_action: f64,
}

pub fn fringe_scales(moments: &Moments, hbar: f64) -> Result<FringeScales> {
    let (sx, sp) = (moments.spread_x, moments.spread_p);
    if !(sx.is_finite() && sx > 0.0 && sp.is_finite() && sp > 0.0) {
        return Err(Error::param(
            "moments",
            format!("spreads must be positive, got ({sx}, {sp})"),
        ));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::NonPositiveHbar(hbar));
    }
    Ok(FringeScales {
        delta_x: hbar / sp,
        delta_p: hbar / sx,
        sub_planck_action: hbar * hbar / (sx * sp),
    })
}
