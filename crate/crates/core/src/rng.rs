//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream derived from the single
//! run seed, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Parameter initialization.
    Init = 0,
    /// Batch composition, timestamp sampling and negatives.
    Training = 1,
    /// Random baselines and fuzzing in evaluation.
    Evaluation = 2,
    /// Synthetic dataset generation.
    Synthetic = 3,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
