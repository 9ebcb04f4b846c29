//! Seed derivation and the project-wide generator.
//!
//! Every stochastic step derives its own generator from a master seed and
//! a tuple of indices, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used everywhere in the crate.
pub type ProjectRng = Xoshiro256PlusPlus;

/// Name recorded in run metadata.
pub const RNG_NAME: &str = "xoshiro256++";

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable hash of a master seed and an ordered list of indices.
pub fn stable_hash(master_seed: u64, parts: &[u64]) -> u64 {
    let acc = parts.iter().fold(mix64(master_seed), |acc, &p| {
        mix64(acc.rotate_left(17).wrapping_add(mix64(p)))
    });
    mix64(acc ^ parts.len() as u64)
}

pub fn rng_for(master_seed: u64, parts: &[u64]) -> ProjectRng {
    ProjectRng::seed_from_u64(stable_hash(master_seed, parts))
}
