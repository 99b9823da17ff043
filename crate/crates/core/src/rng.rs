//! Seeded, independent random streams.
//!
//! One seed fans out into ChaCha8 streams that never overlap, so changing how
//! often arm selection draws leaves context and noise sequences untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Selection = 0,
    Coefficients = 1,
    Contexts = 2,
    Noise = 3,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
