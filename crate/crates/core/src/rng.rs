//! Seeded randomness. Every random draw in the crate goes through ChaCha8
//! (rand_chacha) so runs are reproducible from a 64-bit seed; independent
//! sub-streams (one per tree, fold or question) come from ChaCha's
//! stream counter, which keeps results independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Name and parameters recorded in manifests.
pub const GENERATOR_NAME: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64, stream per sub-task)";

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of the generator seeded by `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
