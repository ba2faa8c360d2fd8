//! Phase-space pictures of a wavefunction and the sparse-cat overlap oracle.

mod cat;
mod transform;

pub use cat::{
    cat_overlap_experiment, mean_displaced_overlap, sparse_cat_state, CatOverlapReport, OverlapDecomposition,
    SparseCatSpec, MASK_RADIUS_FACTOR, SPARSENESS_FACTOR,
};
pub use transform::{wigner_overlap, wigner_transform, wigner_transform_unchecked, WignerFunction, MARGINAL_TOLERANCE};
