//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream keyed by `(purpose,
//! group)`, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    NoisePlan = 1,
    Xguess = 2,
    Measurement = 3,
}

pub fn stream(seed: u64, purpose: Purpose, group: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | group as u64);
    rng
}
