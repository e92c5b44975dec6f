//! Seeding for every random stage.
//!
//! All randomness comes from ChaCha8 seeded with [`SeedableRng::seed_from_u64`].
//! Independent stages (partition shuffle, latent draws, comparison sampling, ...)
//! share the base seed and are separated by ChaCha's 64-bit stream id, so a
//! given `(seed, stage)` produces the same sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Rng;

/// Stream ids for the stages of a planted instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Partition = 1,
    Similarities = 2,
    Comparisons = 3,
    Clustering = 4,
}

pub fn stage_rng(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
