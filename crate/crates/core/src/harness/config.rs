use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classical::InitialGaussianDensity;
use crate::error::{Error, Result};
use crate::phase::{gaussian_wavepacket, SpatialGrid, Wavefunction};
use crate::quantum::{Branch, DrivenHamiltonian, EvolutionSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonianParams {
    pub m: f64,
    pub kappa: f64,
    pub l: f64,
    pub a: f64,
    pub epsilon: f64,
}

impl Default for HamiltonianParams {
    fn default() -> Self {
        let h = DrivenHamiltonian::chaotic();
        Self {
            m: h.m,
            kappa: h.kappa,
            l: h.l,
            a: h.a,
            epsilon: h.epsilon,
        }
    }
}

impl HamiltonianParams {
    pub fn hamiltonian(&self) -> DrivenHamiltonian {
        DrivenHamiltonian {
            m: self.m,
            kappa: self.kappa,
            l: self.l,
            a: self.a,
            epsilon: self.epsilon,
            branch: Branch::Base,
        }
    }
}

/// Minimum-uncertainty packet; `sigma_x` defaults to `√(ħ/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    pub x0: f64,
    pub p0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
}

impl Default for InitialState {
    fn default() -> Self {
        // in the chaotic sea between the x ≈ 3 and x ≈ 9 islands
        Self {
            x0: 6.0,
            p0: 0.0,
            sigma_x: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            n_points: 4096,
            x_min: -60.0,
            x_max: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassicalMethod {
    Pullback,
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalParams {
    /// Cells per axis.
    pub resolution: usize,
    pub method: ClassicalMethod,
    pub sample_every: f64,
    pub tau_max: f64,
    pub pilot_samples: usize,
    pub pilot_margin: f64,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        Self {
            resolution: 128,
            method: ClassicalMethod::Pullback,
            sample_every: 0.05,
            tau_max: 10.0,
            pilot_samples: 10_000,
            pilot_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub hbar: f64,
    pub dt: f64,
    pub sample_every: f64,
    pub tau_max: f64,
    /// Quantum runs stop once the overlap has fallen this far.
    pub stop_overlap: f64,
    pub threshold: f64,
    pub preparation_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub hamiltonian: HamiltonianParams,
    pub initial: InitialState,
    pub grid: GridParams,
    pub classical: ClassicalParams,
}

/// Fourteen evenly spaced preparation times on `[2, 40]`, rounded to two
/// decimals so they fall on the time-step lattice.
pub fn default_preparation_times() -> Vec<f64> {
    (0..14)
        .map(|k| ((2.0 + 38.0 * k as f64 / 13.0) * 100.0).round() / 100.0)
        .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hbar: 0.1,
            dt: 0.005,
            sample_every: 0.05,
            tau_max: 20.0,
            stop_overlap: 0.5,
            threshold: 0.9,
            preparation_times: default_preparation_times(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            hamiltonian: HamiltonianParams::default(),
            initial: InitialState::default(),
            grid: GridParams::default(),
            classical: ClassicalParams::default(),
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        positive("hbar", self.hbar)?;
        positive("dt", self.dt)?;
        positive("sample_every", self.sample_every)?;
        positive("tau_max", self.tau_max)?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::param(
                "threshold",
                format!("must lie in (0, 1), got {}", self.threshold),
            ));
        }
        if !(self.stop_overlap >= 0.0 && self.stop_overlap < self.threshold) {
            return Err(Error::param(
                "stop_overlap",
                "must be non-negative and below the threshold",
            ));
        }
        if self.preparation_times.is_empty() {
            return Err(Error::param("preparation_times", "must not be empty"));
        }
        if self.preparation_times.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || self.preparation_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::param(
                "preparation_times",
                "must be non-negative and strictly increasing",
            ));
        }
        if let Some(s) = self.initial.sigma_x {
            positive("initial.sigma_x", s)?;
        }
        self.hamiltonian.hamiltonian().validate()?;
        self.spatial_grid()?;
        if self.classical.resolution < 2 {
            return Err(Error::param("classical.resolution", "need at least 2 cells per axis"));
        }
        positive("classical.sample_every", self.classical.sample_every)?;
        positive("classical.tau_max", self.classical.tau_max)?;
        positive("classical.pilot_margin", self.classical.pilot_margin)?;
        for t in &self.preparation_times {
            self.schedule(*t)?.validate()?;
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> DrivenHamiltonian {
        self.hamiltonian.hamiltonian()
    }

    pub fn sigma_x(&self) -> f64 {
        self.initial.sigma_x.unwrap_or_else(|| (0.5 * self.hbar).sqrt())
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.n_points, self.grid.x_min, self.grid.x_max, self.hbar)
    }

    pub fn initial_wavefunction(&self) -> Result<Wavefunction> {
        gaussian_wavepacket(&self.spatial_grid()?, self.initial.x0, self.initial.p0, self.sigma_x())
    }

    pub fn initial_density(&self) -> Result<InitialGaussianDensity> {
        InitialGaussianDensity::minimum_uncertainty(self.initial.x0, self.initial.p0, self.sigma_x(), self.hbar)
    }

    pub fn schedule(&self, preparation_time: f64) -> Result<EvolutionSchedule> {
        let s = EvolutionSchedule {
            preparation_time,
            tau_max: self.tau_max,
            dt: self.dt,
            sample_every: self.sample_every,
            stop_overlap: Some(self.stop_overlap),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Reads and validates a TOML config. Missing keys take their defaults;
/// unknown keys are rejected.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { message, .. } => Error::Config {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
        path: PathBuf::new(),
        message: e.to_string().trim().replace('\n', " "),
    })?;
    config.validate()?;
    Ok(config)
}
