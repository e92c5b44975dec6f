//! Planted-cluster generator: partitions, latent similarities and noisy comparisons.

pub mod distributions;
mod quadrature;
pub mod planted;
pub mod sampling;

pub use distributions::{
    delta_of_distributions, params_for_delta, DistributionFamily, DistributionSpec,
};
pub use planted::{
    balanced_sizes, generate_partition, sample_similarities, LatentSimilarities, PlantedConfig,
    Sampling,
};
pub use sampling::{quadruplet_universe, sample_quadruplets, sample_triplets, triplet_universe};
