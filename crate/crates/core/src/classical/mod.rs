//! Classical trajectories, Liouville transport by characteristics, and the
//! classical counterpart of the quantum overlap.

mod density;
mod flow;
mod lyapunov;
mod oracle;
mod overlap;
mod poincare;

pub use density::{density_at, InitialGaussianDensity};
pub use flow::{flow_map, Flow, ForkedFlow, HamiltonianFlow, PhaseSpacePoint};
pub use lyapunov::{lyapunov_estimate, RENORMALIZATION_INTERVAL};
pub use oracle::{stretched_gaussian_overlap, LinearStretchFlow, StretchedGaussianParams};
pub use overlap::{
    classical_overlap, classical_overlap_checked, escaped_mass, pilot_box, pullback_overlap_series, transported_mass,
    CheckedOverlap, OverlapMethod, PhaseBox, CAPTURE_TOLERANCE, REFINEMENT_TOLERANCE, SUPPORT_RADIUS,
};
pub use poincare::{poincare_section, stroboscopic_fixed_point, PoincareCloud, PoincareSample};
