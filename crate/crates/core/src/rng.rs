//! Counter-addressed random streams: draw i of shot s under (seed, stream)
//! is a fixed function of those four numbers, independent of thread layout.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Positioned generator for one measurement record.
pub struct ShotRng {
    inner: ChaCha8Rng,
}

impl ShotRng {
    /// Generator for shot `shot`, leaving room for `draws_per_shot` uniforms
    /// per shot (two 32-bit words each).
    pub fn new(seed: u64, stream: u64, shot: u64, draws_per_shot: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        inner.set_word_pos(u128::from(shot) * u128::from(2 * draws_per_shot));
        Self { inner }
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
