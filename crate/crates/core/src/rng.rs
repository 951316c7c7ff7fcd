//! Counter-based RNG streams.
//!
//! Every random draw in the crate comes from a generator keyed by
//! `(seed, stream, step, index)`, so results do not depend on iteration or
//! thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags. Distinct tags keep independent consumers decorrelated.
pub mod stream {
    pub const WORLD: u64 = 1;
    pub const CLASS_FEATURE: u64 = 2;
    pub const TRAJECTORY: u64 = 3;
    pub const SCAN: u64 = 4;
    pub const ODOMETRY: u64 = 5;
    pub const DROPOUT: u64 = 6;
    pub const POINTS: u64 = 7;
    pub const CONFUSION: u64 = 8;
    pub const FILTER_INIT: u64 = 10;
    pub const FILTER_MOTION: u64 = 11;
    pub const FILTER_RESAMPLE: u64 = 12;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, stream: u64, step: u64, index: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ stream);
    h = splitmix64(h ^ step);
    splitmix64(h ^ index)
}

pub fn stream_rng(seed: u64, stream: u64, step: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(mix(seed, stream, step, index))
}
