//! Seeded noise sources.
//!
//! Every random draw in the crate goes through [`NoiseSource`], a ChaCha8
//! stream cipher generator. Its output is fixed by the seed alone, independent
//! of platform word size or endianness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type NoiseSource = ChaCha8Rng;

pub fn noise_source(seed: u64) -> NoiseSource {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a base seed and a path of stream
/// identifiers, e.g. `derive_seed(seed, &[kind, k, l, sequence, start])`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}
