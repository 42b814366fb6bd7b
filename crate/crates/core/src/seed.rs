//! Seed derivation. Every random stream in the crate is a `ChaCha8Rng`
//! seeded from a 64-bit value mixed through splitmix64, so streams for
//! different trials never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// One round of splitmix64.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of an ordered tuple of tags.
pub fn hash_tags(tags: &[u64]) -> u64 {
    tags.iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// `base ⊕ hash(tags)`.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    base ^ hash_tags(tags)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sub-stream identifiers used inside one trial.
pub(crate) mod stream {
    pub const SUPPORT: u64 = 1;
    pub const VECTORS: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const DESIGN: u64 = 4;
    pub const BASELINE: u64 = 5;
}
