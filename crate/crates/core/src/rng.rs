//! Reproducible random streams.
//!
//! Every random draw in the crate comes from ChaCha8. Independent work units
//! (Monte Carlo replications, null simulations, restarts) get their own
//! stream of the generator keyed by the run seed, so results do not depend on
//! execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a (group, index) pair into a single stream id.
pub fn stream_id(group: u32, index: u32) -> u64 {
    ((group as u64) << 32) | index as u64
}
