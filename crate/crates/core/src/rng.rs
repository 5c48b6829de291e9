//! Seed derivation.
//!
//! Every random quantity in a Monte Carlo run comes from a ChaCha8 stream
//! keyed by `(run_seed, stream)`. Truth generation and filtering use
//! different stream tags, so the inputs a filter sees never depend on which
//! other filters share the grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tag for ground-truth trajectories and measurements.
pub const TRUTH_STREAM: u64 = 0x7472_7574_6800_0001;
/// Stream tag for filter-internal randomness (initialisation, propagation,
/// resampling).
pub const FILTER_STREAM: u64 = 0x6669_6c74_6572_0002;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(run_seed: u64, stream: u64) -> u64 {
    mix(mix(run_seed) ^ stream)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(run_seed: u64, stream: u64) -> SimRng {
    rng_from_seed(derive_seed(run_seed, stream))
}
