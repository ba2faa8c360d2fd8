use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 2")]
    GridSize(usize),
    #[error("degenerate interval [{x_min}, {x_max}]")]
    DegenerateInterval { x_min: f64, x_max: f64 },
    #[error("hbar must be positive and finite, got {0}")]
    NonPositiveHbar(f64),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("representation mismatch: expected {expected}, found {found}")]
    Representation {
        expected: &'static str,
        found: &'static str,
    },
    #[error("support of the requested state is clipped by the grid: {0}")]
    SupportClipped(String),
    #[error("state escaped the grid: boundary density ratio {ratio:.3e} at t = {time}")]
    BoundaryLeak { ratio: f64, time: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("sparse cat centers {0} and {1} are closer than the sparseness limit")]
    NotSparse(usize, usize),
    #[error("non-finite phase-space state at t = {0}")]
    Divergence(f64),
    #[error("density support escapes the integration box (captured mass {0:.8})")]
    SupportEscape(f64),
    #[error("malformed overlap series: {0}")]
    MalformedSeries(String),
    #[error("too few usable points for a fit: {0} (need at least {1})")]
    TooFewPoints(usize, usize),
    #[error("aliasing detected: marginal mismatch {0:.3e}")]
    Aliasing(f64),
    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
