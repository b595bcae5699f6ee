//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit generator. The generator is
//! ChaCha8 seeded from a `u64`; independent child streams are derived with
//! [`split`], which draws a fresh seed from the parent. The same seed always
//! yields the same draws within one build.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child stream from `parent`.
pub fn split(parent: &mut Rng) -> Rng {
    ChaCha8Rng::seed_from_u64(parent.random())
}
