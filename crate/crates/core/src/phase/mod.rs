//! Uniform grids, wavepackets, inner products and moment observables.

mod grid;
mod spectral;
mod wavefunction;

pub use grid::SpatialGrid;
pub use spectral::Spectral;
pub(crate) use wavefunction::check_support;
pub use wavefunction::{
    gaussian_wavepacket, inner_product, overlap, Moments, Representation, Wavefunction, BOUNDARY_RATIO_LIMIT,
    SUPPORT_MARGIN,
};
