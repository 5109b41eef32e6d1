//! Seeded random streams.
//!
//! Every random decision derives from one 64-bit session seed. The seed is
//! expanded with `ChaCha8Rng::seed_from_u64` and each consumer reads its own
//! ChaCha stream number, so adding draws to one consumer never shifts another.
//! Bounded integers are always drawn as `u64`, which keeps sequences identical
//! on 32- and 64-bit targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Presentation order shuffle.
    Order = 0,
    /// Left/right placement.
    Sides = 1,
    /// Position of tie-break presentations.
    Insertions = 2,
    /// Simulated observer choices.
    Choices = 3,
    /// Simulated response times.
    ResponseTimes = 4,
    /// Simulated questionnaire answers.
    Questionnaire = 5,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Uniform integer in `0..n`.
pub fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    rng.random_range(0..n)
}

/// In-place Fisher–Yates shuffle.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// SplitMix64 finalizer, used to derive per-replication seeds from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
