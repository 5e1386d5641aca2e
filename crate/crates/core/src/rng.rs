//! Reproducible random streams.
//!
//! A [`RandomSource`] is a plain `(master_seed, stream_id)` pair. Opening it
//! yields an [`RngStream`]: xoshiro256++ whose four state words are the first
//! four outputs of SplitMix64 started at `master_seed ^ mix64(stream_id)`.
//!
//! Derived variates:
//! * uniform `[0,1)`: top 53 bits of a draw times `2^-53`;
//! * standard normal: Marsaglia's polar method on `2U-1` pairs, the second
//!   variate of each accepted pair is cached and returned by the next call;
//! * Rademacher: `-1` when the top bit of a draw is set, `+1` otherwise;
//! * index below `n`: high word of the 128-bit product `draw * n`.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer applied to `z + GOLDEN_GAMMA`.
pub fn mix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of words into one seed with repeated SplitMix64 mixing.
pub fn hash_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908_u64, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Identifies one deterministic stream of random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RandomSource {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RandomSource {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Opens a fresh stream positioned at its first draw.
    pub fn stream(&self) -> RngStream {
        RngStream {
            inner: Xoshiro256PlusPlus::seed_from_u64(self.master_seed ^ mix64(self.stream_id)),
            spare: None,
        }
    }

    /// Child source keyed by `tag`; its master seed is the first draw of this stream.
    pub fn derive(&self, tag: u64) -> RandomSource {
        RandomSource {
            master_seed: self.stream().next_u64(),
            stream_id: tag,
        }
    }
}

/// xoshiro256++ generator with a cached spare normal variate.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl RngStream {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    pub fn rademacher(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniformly random permutation of `0..n` (Fisher-Yates, from the back).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.index_below(i + 1);
            p.swap(i, j);
        }
        p
    }

    /// `k` distinct indices from `0..n`, uniformly, in draw order.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in 0..k.min(n) {
            let j = i + self.index_below(n - i);
            p.swap(i, j);
        }
        p.truncate(k.min(n));
        p
    }

    /// Uniform point on the unit sphere in `R^d`.
    pub fn unit_vector(&mut self, d: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
