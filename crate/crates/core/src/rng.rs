//! Seed splitting: one ChaCha8 stream per (seed, path index).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// Independent generator for path `index` under `seed`. The result does not
/// depend on which thread asks for it.
pub fn path_rng(seed: u64, index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Secondary stream family for auxiliary draws (initial positions, test data)
/// that must not overlap with the per-path streams.
pub fn aux_rng(seed: u64, tag: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(tag);
    rng
}
