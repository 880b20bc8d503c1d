//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a tuple of integers
//! (master seed, component, shot, ...) rather than drawn from a shared
//! generator, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type WalkRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `master` with an ordered key into a new 64-bit seed.
pub fn derive_seed(master: u64, key: &[u64]) -> u64 {
    key.iter().enumerate().fold(splitmix64(master), |acc, (pos, &part)| {
        splitmix64(acc ^ splitmix64(part.wrapping_add((pos as u64 + 1).wrapping_mul(GOLDEN))))
    })
}

pub fn rng_from_seed(seed: u64) -> WalkRng {
    WalkRng::seed_from_u64(seed)
}
