//! Deterministic seed derivation.
//!
//! Parallel jobs (Gram entries, sweep cells, per-point estimates) each get a
//! seed mixed from a base seed and their coordinates, so results do not
//! depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used when one user seed fans out into several roles.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const DATA: u64 = 3;
    pub const TEST_DATA: u64 = 4;
    pub const EVAL: u64 = 5;
    pub const SWEEP: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
