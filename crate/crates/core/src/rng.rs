//! Seeded random sources.
//!
//! Every random draw in the crate goes through a caller-supplied [`rand::Rng`]. The
//! default generator is ChaCha8 seeded with [`rand::SeedableRng::seed_from_u64`]:
//! the sequence is fixed for a given seed on every platform. Independent substreams
//! for parallel or per-input work are obtained by selecting ChaCha stream `index`
//! under the same master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomSource = ChaCha8Rng;

pub fn seeded(seed: u64) -> RandomSource {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Substream `index` under master `seed`. Stream 0 equals [`seeded`].
pub fn substream(seed: u64, index: u64) -> RandomSource {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
