//! Seeded, splittable random streams.
//!
//! Every consumer derives its generator from a `(seed, stream)` pair, so
//! per-channel and per-trial draws are independent of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Generator for stream `stream` of the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream identifiers for the two draws made per AMQD block.
pub(crate) fn block_streams(block_index: u64) -> (u64, u64) {
    (block_index.wrapping_mul(2), block_index.wrapping_mul(2).wrapping_add(1))
}
