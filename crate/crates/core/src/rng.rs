//! Seed handling. Every random quantity in the crate is drawn from a
//! [`SimRng`] whose seed is derived from a single global seed by
//! [`derive_seed`], so that each job owns an independent, reproducible
//! substream.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of substream `index` of purpose `stream` from `base`.
///
/// The derivation is `mix(mix(mix(base) ^ stream) ^ index)`; distinct
/// `(stream, index)` pairs give unrelated seeds.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(base) ^ stream) ^ index)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream tags used by [`derive_seed`].
pub mod tag {
    pub const ENVIRONMENT: u64 = 0x454E_5649;
    pub const INITIAL: u64 = 0x494E_4954;
    pub const EVENTS: u64 = 0x4556_4E54;
    pub const REPLICA: u64 = 0x5245_504C;
    pub const TRIAL: u64 = 0x5452_494C;
    pub const SCALE: u64 = 0x5343_414C;
    pub const GRID: u64 = 0x4752_4944;
}
