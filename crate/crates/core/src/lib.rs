//! Clustering from passive triplet and quadruplet comparisons.
//!
//! Pipeline: comparisons ([`comparison`], [`io`], or sampled from a planted
//! model in [`model`]) → pairwise similarities ([`similarity`]) → an SDP
//! relaxation of k-means ([`sdp`]), with the number of clusters picked by
//! [`selection`] when unknown → a partition read off the solution ([`eval`]).
//! [`experiment`] runs planted sweeps and clusters comparison files end to end.

pub mod comparison;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod model;
pub mod partition;
pub mod rng;
pub mod sdp;
pub mod selection;
pub mod similarity;

pub use error::{Error, Result};
pub use partition::Partition;
