//! Seeded, reproducible random streams.
//!
//! Every trajectory owns one [`SeededRng`]. The stream is ChaCha8, a
//! counter-based generator: the value of draw `n` depends only on
//! `(seed, n)`, so results do not depend on how trajectories are scheduled
//! across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for trajectory `index` of a batch started from `base_seed`.
    pub fn for_trajectory(base_seed: u64, index: u64) -> Self {
        Self::new(trajectory_seed(base_seed, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.inner.sample(StandardNormal);
        }
    }

    /// Derive an independent child stream, e.g. for a diagnostic that must
    /// not perturb the parent sequence.
    pub fn fork(&mut self) -> Self {
        Self::new(self.inner.random::<u64>())
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index`: `base_seed XOR mix64(index)`.
pub fn trajectory_seed(base_seed: u64, index: u64) -> u64 {
    base_seed ^ mix64(index)
}
