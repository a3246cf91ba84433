//! Deterministic seed derivation.
//!
//! Every random draw in the workspace flows from a single 64-bit seed through
//! the functions in this module. Substreams are derived by mixing the base
//! seed with a stream tag (and optionally an index), so independent parts of
//! a simulation consume independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for the simulator's independent random substreams.
pub mod stream {
    pub const POPULATION: u64 = 0x01;
    pub const TASKS: u64 = 0x02;
    pub const MARKET: u64 = 0x03;
    pub const DECIDE: u64 = 0x04;
    pub const EXECUTE: u64 = 0x05;
}

/// SplitMix64 finalizer. Bijective on u64, so distinct inputs stay distinct.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a substream seed from a base seed and a stream tag.
pub fn derive(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

/// Derives a per-item seed (e.g. one decision stream per task index).
pub fn derive_indexed(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(derive(base, tag) ^ splitmix64(index ^ 0xA076_1D64_78BD_642F))
}

/// A seeded ChaCha8 stream for the given substream of `base`.
pub fn rng_for(base: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tag))
}

/// A seeded ChaCha8 stream for item `index` within substream `tag`.
pub fn rng_for_indexed(base: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_indexed(base, tag, index))
}

/// FNV-1a hash of a string, used to key experiment cells by name so that
/// reordering a plan's grid never changes any cell's seeds.
pub fn fnv1a(name: &str) -> u64 {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for byte in name.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}
