//! Deterministic random-number plumbing.
//!
//! Every stochastic operation in the crate takes an explicit seed and derives
//! independent substreams from it with [`substream`]. A substream is keyed by
//! the master seed plus a path of indices (sample index, matcher index, run
//! index, ...), so results do not depend on evaluation order: rewriting a
//! dataset serially or in parallel produces bit-identical scores.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche for key mixing.
#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a master seed with a path of indices into a single 64-bit key.
pub fn mix(seed: u64, path: &[u64]) -> u64 {
    let mut key = splitmix64(seed);
    for &part in path {
        key = splitmix64(key ^ splitmix64(part.wrapping_add(0xa076_1d64_78bd_642f)));
    }
    key
}

/// Deterministic generator for the substream identified by `path`.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, path))
}

/// Tags used to separate the purpose-specific seed domains.
pub mod domain {
    pub const SAMPLE_ALPHA: u64 = 0x01;
    pub const FAKE_SCORES: u64 = 0x02;
    pub const SPOOF: u64 = 0x03;
    pub const RESAMPLE: u64 = 0x04;
    pub const SYNTH: u64 = 0x05;
    pub const CHIMERA: u64 = 0x06;
    pub const SPLIT: u64 = 0x07;
    pub const GRID: u64 = 0x08;
    pub const CV: u64 = 0x09;
    pub const ALPHA_DENSITY: u64 = 0x0a;
    pub const EVAL: u64 = 0x0b;
}
