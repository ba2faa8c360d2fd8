//! Configuration, sweeps over preparation time, and CSV output.

mod config;
mod export;
mod fit;
mod io;
mod studies;
mod sweep;

pub use config::{
    default_preparation_times, load_config, parse_config, ClassicalMethod, ClassicalParams, ExperimentConfig,
    GridParams, HamiltonianParams, InitialState,
};
pub use export::{export_csv, load_csv, write_fringe_csv, write_series_csv, SWEEP_COLUMNS};
pub use fit::{linear_fit, LinearFit};
pub use io::write_atomically;
pub use studies::{run_cat_study, stretched_oracle, CatStudy, CatStudyParams, CatStudyRow, OracleComparison};
pub use sweep::{
    classical_series, extract_decoherence_time, quantum_record, quantum_series, run_classical_sweep, run_fringe_study,
    run_quantum_sweep, ClassicalSeries, FringeStudy, Sweep, SweepFailure, SweepRecord, FRINGE_EXCLUDED,
    FRINGE_MIN_POINTS,
};
