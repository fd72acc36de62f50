//! Seed derivation.
//!
//! Every random stream is identified by `(seed, tag)` and seeded through a
//! 64-bit avalanche mixer, so replications and worker chunks can be generated
//! in any order and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stream in the crate.
pub type StreamRng = ChaCha8Rng;

/// Stream tags. Distinct tags give statistically independent streams.
pub mod tag {
    pub const DATA: u64 = 0x01;
    pub const PERTURB: u64 = 0x02;
    pub const SIGN_VECTOR: u64 = 0x03;
    pub const PROBE: u64 = 0x04;
    pub const DIAGNOSTIC: u64 = 0x05;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix(master, a, b)`: the seed of row `(a, b)` under `master`.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let h = mix64(master.wrapping_add(GOLDEN));
    let h = mix64(h ^ a.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019));
    mix64(h ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(GOLDEN))
}

pub fn stream(seed: u64, tag: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tag, 0))
}

/// Stream for chunk `index` of a fanned-out Monte-Carlo computation.
pub fn chunk_stream(seed: u64, tag: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tag, index.wrapping_add(1)))
}
