//! Seeded random draws for the simulator.
//!
//! The generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`). The
//! 32-byte key is the seed as 8 little-endian bytes followed by 24 zero bytes,
//! and the stream number selects independent sequences under one seed.
//! Draws are derived from `next_u64` only:
//!
//! * integer in `[0, n)`: `next_u64() % n`
//! * Bernoulli(p): `(next_u64() >> 11) as f64 / 2^53 < p`
//!
//! Any ChaCha8 implementation with the same key and stream layout reproduces
//! the same runs.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub const WORKLOAD_STREAM: u64 = 0;
pub const FAULT_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct SimRng(ChaCha8Rng);

impl SimRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Self(rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, n)`. Panics if `n` is 0.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        self.next_u64() % n
    }

    /// Uniform in `[min, max]`.
    pub fn between(&mut self, min: u64, max: u64) -> u64 {
        debug_assert!(min <= max);
        match (max - min).checked_add(1) {
            Some(span) => min + self.below(span),
            None => self.next_u64(),
        }
    }

    /// True with probability `p`. Always consumes one draw.
    pub fn chance(&mut self, p: f64) -> bool {
        let unit = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        unit < p
    }
}
