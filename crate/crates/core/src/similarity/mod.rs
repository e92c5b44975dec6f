//! Similarity matrices from comparison streams.

mod additive;
mod matrix;
mod multiplicative;

pub use additive::{build_adds3, build_adds4, merge_additive, AdditiveAccumulator};
pub use matrix::{SimilarityKind, SimilarityMatrix};
pub(crate) use matrix::max_asymmetry;
pub use multiplicative::{build_mulk3, build_mulk4};
