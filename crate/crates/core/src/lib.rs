//! Sensitivity of quantum and classical chaotic evolution to perturbations
//! of the equations of motion.
//!
//! A state is prepared under a driven chaotic Hamiltonian for a time `T`, then
//! evolved under two slightly different Hamiltonians. The decay of the overlap
//! between the two branches is tracked quantum mechanically (wavefunctions,
//! Wigner functions) and classically (Liouville densities), together with the
//! uncertainty-principle lower bound on the quantum decay.

pub mod classical;
pub mod error;
pub mod harness;
pub mod phase;
pub mod quantum;
pub mod wigner;

pub use error::{Error, Result};
