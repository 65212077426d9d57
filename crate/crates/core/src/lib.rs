//! Single-snapshot direction-of-arrival estimation with sparse linear
//! arrays.
//!
//! The pipeline: decompose a sparse (virtual) array into shift-invariant
//! sum-set structure ([`decompose`]), rearrange one snapshot into a
//! spatially smoothed matrix ([`smoothing`]), run subspace MUSIC on its
//! SVD ([`music`]), and audit whether the decomposition can identify the
//! requested number of sources at all ([`identifiability`]).

pub mod decompose;
pub mod geometry;
pub mod identifiability;
pub mod linalg;
pub mod manifold;
pub mod music;
pub mod presets;
pub mod smoothing;
