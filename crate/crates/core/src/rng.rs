//! Seeded RNG with stream-stable value derivation.
//!
//! Uniform values are derived from the raw ChaCha8 word stream directly so
//! that generated fixtures stay byte-identical across dependency updates.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Derive an independent stream for a named subtask.
    pub fn fork(&mut self, tag: u64) -> SeededRng {
        let s = self.inner.next_u64() ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        SeededRng::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform over [-hi, -lo] ∪ [lo, hi]; stays away from zero.
    pub fn signed_range(&mut self, lo: f64, hi: f64) -> f64 {
        let mag = self.range(lo, hi);
        if self.unit() < 0.5 {
            -mag
        } else {
            mag
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.unit() * n as f64) as usize % n.max(1)
    }

    pub fn complex(&mut self, scale: f64) -> num_complex::Complex64 {
        num_complex::Complex64::new(
            self.range(-scale, scale),
            self.range(-scale, scale),
        )
    }
}
