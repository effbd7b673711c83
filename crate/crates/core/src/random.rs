//! Seeded random streams.
//!
//! Every stochastic step of the optimizer pulls from a [`UnitDraw`] so the
//! exact sequence of draws can be replaced by pinned values in tests.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A source of uniform numbers in `[0, 1)`.
pub trait UnitDraw {
    fn unit(&mut self) -> f64;
}

impl<R: RngCore> UnitDraw for R {
    fn unit(&mut self) -> f64 {
        self.random::<f64>()
    }
}

/// The crate-wide seeded generator.
pub type Stream = ChaCha8Rng;

pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Replays a fixed list of values, cycling when exhausted.
///
/// `PinnedDraws::constant(1.0)` turns every random weight into one, which
/// reduces the stochastic updates to their deterministic skeleton.
#[derive(Debug, Clone)]
pub struct PinnedDraws {
    values: Vec<f64>,
    cursor: usize,
}

impl PinnedDraws {
    pub fn constant(value: f64) -> Self {
        Self::cycle(vec![value])
    }

    pub fn cycle(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "pinned draw list must be non-empty");
        Self { values, cursor: 0 }
    }

    /// Number of values handed out so far.
    pub fn drawn(&self) -> usize {
        self.cursor
    }
}

impl UnitDraw for PinnedDraws {
    fn unit(&mut self) -> f64 {
        let v = self.values[self.cursor % self.values.len()];
        self.cursor += 1;
        v
    }
}

/// SplitMix64 finalizer, used to derive child seeds from structured data.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed.
pub fn derive_seed(base: u64, words: impl IntoIterator<Item = u64>) -> u64 {
    words
        .into_iter()
        .fold(mix64(base), |acc, w| mix64(acc ^ mix64(w)))
}
