//! Time evolution under the driven Hamiltonian, the forked perturbed
//! evolution, and the overlap/bound diagnostics.

mod bounds;
mod fork;
mod hamiltonian;
mod propagator;

pub use bounds::{decoherence_bound, fringe_scales, lower_bound_curve, BoundCurve, FringeScales};
pub use fork::{evolve_fork, EvolutionSchedule, Fork, ForkSample, OverlapSeries};
pub use hamiltonian::{Branch, DrivenHamiltonian};
pub use propagator::{split_operator_step, SplitOperator};
