//! Seeded random streams.
//!
//! Every replicate gets its own ChaCha8 generator keyed by `base_seed + replicate`;
//! independent experiment arms use distinct ChaCha stream ids so that their draws
//! never overlap even when they share a base seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for replicate `replicate` of arm `stream`.
pub fn replicate_rng(base_seed: u64, replicate: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(replicate));
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
