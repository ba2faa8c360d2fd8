use serde::{Deserialize, Serialize};

use super::bounds::{lower_bound_curve, BoundCurve};
use super::hamiltonian::{Branch, DrivenHamiltonian};
use super::propagator::SplitOperator;
use crate::error::{Error, Result};
use crate::phase::{overlap, Moments, Wavefunction};

/// Time stepping of a fork run: preparation for `preparation_time` under the
/// base Hamiltonian, then up to `tau_max` under the two perturbed branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSchedule {
    pub preparation_time: f64,
    pub tau_max: f64,
    pub dt: f64,
    pub sample_every: f64,
    /// Stop early once the overlap drops below this level.
    pub stop_overlap: Option<f64>,
}

impl Default for EvolutionSchedule {
    fn default() -> Self {
        Self {
            preparation_time: 0.0,
            tau_max: 200.0,
            dt: 0.005,
            sample_every: 0.1,
            stop_overlap: Some(0.5),
        }
    }
}

fn whole_multiple(value: f64, unit: f64) -> Option<usize> {
    let r = value / unit;
    let n = r.round();
    ((r - n).abs() <= 1e-6 * r.abs().max(1.0)).then_some(n as usize)
}

impl EvolutionSchedule {
    pub fn with_preparation(self, preparation_time: f64) -> Self {
        Self {
            preparation_time,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.sample_every.is_finite() && self.sample_every >= self.dt) {
            return Err(Error::param("sample_every", "must be at least dt"));
        }
        if !(self.preparation_time.is_finite() && self.preparation_time >= 0.0) {
            return Err(Error::param("preparation_time", "must be nonnegative"));
        }
        if !(self.tau_max.is_finite() && self.tau_max >= 0.0) {
            return Err(Error::param("tau_max", "must be nonnegative"));
        }
        if whole_multiple(self.preparation_time, self.dt).is_none() {
            return Err(Error::param("preparation_time", "must be a whole number of steps"));
        }
        if whole_multiple(self.sample_every, self.dt).is_none() {
            return Err(Error::param("sample_every", "must be a whole number of steps"));
        }
        if let Some(s) = self.stop_overlap {
            if !(0.0..1.0).contains(&s) {
                return Err(Error::param("stop_overlap", "must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    pub fn preparation_steps(&self) -> usize {
        whole_multiple(self.preparation_time, self.dt).unwrap_or(0)
    }

    pub fn steps_per_sample(&self) -> usize {
        whole_multiple(self.sample_every, self.dt).unwrap_or(1).max(1)
    }

    /// Number of samples after the fork needed to reach `tau_max`.
    pub fn max_samples(&self) -> usize {
        (self.tau_max / self.sample_every - 1e-9).ceil().max(0.0) as usize
    }
}

/// One recorded instant after the fork.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForkSample {
    pub tau: f64,
    pub overlap: f64,
    /// Tighter of the two perturbation spreads.
    pub delta_v: f64,
    pub spread_x_plus: f64,
    pub spread_x_minus: f64,
}

/// A pair of branch states evolving from a common prepared state.
#[derive(Debug, Clone)]
pub struct Fork {
    hamiltonian: DrivenHamiltonian,
    schedule: EvolutionSchedule,
    plus: Wavefunction,
    minus: Wavefunction,
    prop_plus: SplitOperator,
    prop_minus: SplitOperator,
    samples_taken: usize,
    prepared_moments: Moments,
    max_norm_drift: f64,
}

impl Fork {
    /// Evolves `psi0` under the base Hamiltonian up to the fork and duplicates it.
    pub fn prepare(psi0: &Wavefunction, hamiltonian: &DrivenHamiltonian, schedule: &EvolutionSchedule) -> Result<Self> {
        schedule.validate()?;
        let grid = *psi0.grid();
        let base = hamiltonian.with_branch(Branch::Base);
        let mut prepared = psi0.clone();
        let n_prep = schedule.preparation_steps();
        SplitOperator::new(grid, base, schedule.dt)?.advance(&mut prepared, 0.0, n_prep)?;
        let t_fork = n_prep as f64 * schedule.dt;
        prepared.check_confined(t_fork)?;
        let prepared_moments = prepared.moments()?;
        let max_norm_drift = (prepared.norm_sqr() - 1.0).abs();
        Ok(Self {
            hamiltonian: *hamiltonian,
            schedule: *schedule,
            prop_plus: SplitOperator::new(grid, hamiltonian.with_branch(Branch::Plus), schedule.dt)?,
            prop_minus: SplitOperator::new(grid, hamiltonian.with_branch(Branch::Minus), schedule.dt)?,
            minus: prepared.clone(),
            plus: prepared,
            samples_taken: 0,
            prepared_moments,
            max_norm_drift,
        })
    }

    pub fn plus(&self) -> &Wavefunction {
        &self.plus
    }

    pub fn minus(&self) -> &Wavefunction {
        &self.minus
    }

    pub fn prepared_moments(&self) -> &Moments {
        &self.prepared_moments
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.max_norm_drift
    }

    fn step_index(&self) -> usize {
        self.samples_taken * self.schedule.steps_per_sample()
    }

    /// Time since the fork.
    pub fn tau(&self) -> f64 {
        self.step_index() as f64 * self.schedule.dt
    }

    /// Absolute time, continuous through the fork.
    pub fn time(&self) -> f64 {
        (self.schedule.preparation_steps() + self.step_index()) as f64 * self.schedule.dt
    }

    /// Diagnostics of the current pair of states.
    pub fn sample(&self) -> Result<ForkSample> {
        let (_, sx_plus) = self.plus.position_moments()?;
        let (_, sx_minus) = self.minus.position_moments()?;
        let delta_v = self
            .hamiltonian
            .perturbation_spread(sx_plus)
            .min(self.hamiltonian.perturbation_spread(sx_minus));
        Ok(ForkSample {
            tau: self.tau(),
            overlap: overlap(&self.minus, &self.plus)?,
            delta_v,
            spread_x_plus: sx_plus,
            spread_x_minus: sx_minus,
        })
    }

    /// Advances both branches by one sampling stride.
    pub fn advance_sample(&mut self) -> Result<ForkSample> {
        let t0 = self.time();
        let steps = self.schedule.steps_per_sample();
        self.prop_plus.advance(&mut self.plus, t0, steps)?;
        self.prop_minus.advance(&mut self.minus, t0, steps)?;
        self.samples_taken += 1;
        let t = self.time();
        self.plus.check_confined(t)?;
        self.minus.check_confined(t)?;
        for psi in [&self.plus, &self.minus] {
            self.max_norm_drift = self.max_norm_drift.max((psi.norm_sqr() - 1.0).abs());
        }
        self.sample()
    }
}

/// Recorded overlap decay of one fork run.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSeries {
    pub preparation_time: f64,
    pub hbar: f64,
    pub times: Vec<f64>,
    pub overlap: Vec<f64>,
    pub delta_v: Vec<f64>,
    pub phi: Vec<f64>,
    pub bound: Vec<f64>,
    /// Number of leading samples for which the bound is valid (`φ < π/2`).
    pub bound_valid_len: usize,
    /// Moments of the prepared state at `τ = 0`.
    pub prepared: Moments,
    pub max_norm_drift: f64,
}

impl OverlapSeries {
    pub fn from_samples(
        preparation_time: f64,
        hbar: f64,
        sample_every: f64,
        samples: &[ForkSample],
        prepared: Moments,
        max_norm_drift: f64,
    ) -> Result<Self> {
        let delta_v: Vec<f64> = samples.iter().map(|s| s.delta_v).collect();
        let BoundCurve { phi, bound, valid_len } = lower_bound_curve(&delta_v, sample_every, hbar)?;
        Ok(Self {
            preparation_time,
            hbar,
            times: samples.iter().map(|s| s.tau).collect(),
            overlap: samples.iter().map(|s| s.overlap).collect(),
            delta_v,
            phi,
            bound,
            bound_valid_len: valid_len,
            prepared,
            max_norm_drift,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True if the horizon was reached after `φ` passed `π/2`.
    pub fn bound_window_closed(&self) -> bool {
        self.bound_valid_len < self.len()
    }

    /// Largest `cos²φ − O` over the validity window (negative when the bound holds
    /// with margin).
    pub fn max_bound_excess(&self) -> f64 {
        (0..self.bound_valid_len)
            .map(|k| self.bound[k] - self.overlap[k])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn bound_violations(&self, tolerance: f64) -> usize {
        (0..self.bound_valid_len)
            .filter(|&k| self.overlap[k] < self.bound[k] - tolerance)
            .count()
    }
}

/// Prepares, forks and records the overlap decay.
pub fn evolve_fork(
    psi0: &Wavefunction,
    hamiltonian: &DrivenHamiltonian,
    schedule: &EvolutionSchedule,
) -> Result<OverlapSeries> {
    let mut fork = Fork::prepare(psi0, hamiltonian, schedule)?;
    let mut samples = vec![fork.sample()?];
    for _ in 0..schedule.max_samples() {
        let s = fork.advance_sample()?;
        samples.push(s);
        if matches!(schedule.stop_overlap, Some(level) if s.overlap < level) {
            break;
        }
    }
    OverlapSeries::from_samples(
        schedule.preparation_time,
        psi0.grid().hbar(),
        schedule.sample_every,
        &samples,
        *fork.prepared_moments(),
        fork.max_norm_drift(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{gaussian_wavepacket, SpatialGrid};
    use approx::assert_abs_diff_eq;

    fn setup() -> (Wavefunction, DrivenHamiltonian) {
        let grid = SpatialGrid::new(1024, -30.0, 30.0, 0.1).unwrap();
        let psi = gaussian_wavepacket(&grid, 6.0, 0.0, 0.05_f64.sqrt()).unwrap();
        (psi, DrivenHamiltonian::chaotic())
    }

    #[test]
    fn schedule_validation() {
        let s = EvolutionSchedule::default();
        assert!(s.validate().is_ok());
        assert!(EvolutionSchedule { dt: 0.0, ..s }.validate().is_err());
        assert!(EvolutionSchedule {
            sample_every: 0.001,
            ..s
        }
        .validate()
        .is_err());
        assert!(EvolutionSchedule {
            preparation_time: 1.0023,
            ..s
        }
        .validate()
        .is_err());
        assert!(EvolutionSchedule { tau_max: -1.0, ..s }.validate().is_err());
        assert_eq!(s.with_preparation(2.0).preparation_steps(), 400);
        assert_eq!(s.steps_per_sample(), 20);
        assert_eq!(EvolutionSchedule { tau_max: 1.0, ..s }.max_samples(), 10);
    }

    #[test]
    fn zero_offset_keeps_unit_overlap() {
        let (psi, h) = setup();
        let h = DrivenHamiltonian { epsilon: 0.0, ..h };
        let sched = EvolutionSchedule {
            preparation_time: 2.0,
            tau_max: 3.0,
            ..Default::default()
        };
        let s = evolve_fork(&psi, &h, &sched).unwrap();
        assert_eq!(s.len(), 31);
        assert!(s.overlap.iter().all(|o| (o - 1.0).abs() < 1e-9));
        assert!(s.delta_v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn overlap_starts_at_one_and_respects_bound() {
        let (psi, h) = setup();
        let sched = EvolutionSchedule {
            preparation_time: 5.0,
            tau_max: 5.0,
            ..Default::default()
        };
        let s = evolve_fork(&psi, &h, &sched).unwrap();
        assert_abs_diff_eq!(s.overlap[0], 1.0, epsilon = 1e-10);
        assert!(s.phi.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(s.bound_violations(1e-6), 0);
        assert!(s.max_norm_drift < 1e-10);
        assert!(s.overlap.last().unwrap() < &0.95);
    }

    #[test]
    fn branch_exchange_leaves_overlap_unchanged() {
        let (psi, h) = setup();
        let sched = EvolutionSchedule {
            preparation_time: 1.0,
            tau_max: 1.0,
            ..Default::default()
        };
        let a = evolve_fork(&psi, &h, &sched).unwrap();
        let b = evolve_fork(
            &psi,
            &DrivenHamiltonian {
                epsilon: -h.epsilon,
                ..h
            },
            &sched,
        )
        .unwrap();
        for (x, y) in a.overlap.iter().zip(&b.overlap) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn drive_phase_runs_through_the_fork() {
        let (psi, h) = setup();
        let sched = EvolutionSchedule {
            preparation_time: 1.0,
            tau_max: 1.0,
            ..Default::default()
        };
        let mut fork = Fork::prepare(&psi, &h, &sched).unwrap();
        assert_abs_diff_eq!(fork.time(), 1.0, epsilon = 1e-12);
        fork.advance_sample().unwrap();
        assert_abs_diff_eq!(fork.time(), 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(fork.tau(), 0.1, epsilon = 1e-12);
    }
}
