//! Seed derivation for reproducible, parallel-safe random streams.
//!
//! Every independent unit of randomness (restart, iteration, candidate,
//! simulation batch) gets its own generator seeded from the master seed and
//! its stream coordinates, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of stream indices.
pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    stream
        .iter()
        .fold(splitmix64(master), |acc, &s| splitmix64(acc ^ splitmix64(s)))
}

pub fn stream_rng(master: u64, stream: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream))
}
