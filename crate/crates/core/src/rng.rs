//! Seeded random streams.
//!
//! Every random quantity in the crate comes from a ChaCha20 generator
//! (`rand_chacha` 0.3). A stream is identified by `(seed, stream)`: the seed
//! is expanded with `seed_from_u64` and the 64-bit stream id selects one of
//! ChaCha's independent counter streams. Callers derive stream ids from a
//! purpose tag and an index (see [`stream_id`]), so each dataset draw,
//! experiment run or resample owns a generator that does not depend on
//! scheduling order.
//!
//! Uniforms are built from the top 53 bits of `next_u64` and normals use the
//! Box–Muller transform, so the sample sequence is fixed by this file rather
//! than by a distribution crate's internals.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Purpose tags occupying the high 16 bits of a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum StreamTag {
    Dataset = 1,
    CaseStudyRun = 2,
    Resample = 3,
    SyntheticLog = 4,
}

/// Stream id for the `index`-th use of `tag`.
pub fn stream_id(tag: StreamTag, index: u64) -> u64 {
    debug_assert!(index < 1 << 48);
    ((tag as u64) << 48) | index
}

/// A deterministic source of uniform and Gaussian variates.
#[derive(Clone, Debug)]
pub struct SeededStream {
    rng: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            spare_normal: None,
        }
    }

    pub fn tagged(seed: u64, tag: StreamTag, index: u64) -> Self {
        Self::new(seed, stream_id(tag, index))
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer on `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.rng.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal variate.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Normal variate with the given mean and variance.
    pub fn normal(&mut self, mean: f64, variance: f64) -> f64 {
        mean + variance.sqrt() * self.standard_normal()
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
