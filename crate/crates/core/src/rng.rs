//! Seeded randomness.
//!
//! All randomness flows through [`SeededRng`], ChaCha with 8 rounds as
//! implemented by `rand_chacha`. ChaCha is a published, platform independent
//! stream cipher, so a `u64` seed reproduces the same stream on every target.
//! Independent streams for parallel work are obtained with [`derive_seed`],
//! never by sharing a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `seed` and a stream index into a new seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
