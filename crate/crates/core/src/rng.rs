//! Seeded randomness shared by every stochastic operation.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`). A run seed `s` is
//! expanded with `SeedableRng::seed_from_u64(s)` and each consumer then
//! selects its own ChaCha stream with `set_stream(stream)`, using the
//! constants below. Retries of the template split use stream
//! `SPLIT_TEMPLATE + attempt`. Uniform indices below `n` are drawn from one
//! `next_u64()` as `(x * n) >> 64` (128-bit product).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub mod stream {
    pub const SAMPLE_DIVERSE: u64 = 1;
    pub const SAMPLE_RANDOM: u64 = 2;
    pub const SPLIT_IID: u64 = 3;
    pub const GEN_POOL: u64 = 4;
    pub const SPLIT_TEMPLATE: u64 = 1 << 32;
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform index in `0..n`. Always consumes exactly one draw.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() over an empty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fisher-Yates over the first `k` positions: afterwards `items[..k]` is
    /// a uniform sample without replacement, in selection order.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        for i in 0..k.min(n) {
            let j = i + self.index(n - i);
            items.swap(i, j);
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        self.partial_shuffle(items, n);
    }

    /// Index drawn proportionally to `weights`; `None` if they sum to zero.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut target = self.unit() * total;
        for (i, &w) in weights.iter().enumerate() {
            if target < w {
                return Some(i);
            }
            target -= w;
        }
        weights.iter().rposition(|&w| w > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: Vec<u64> = (0..4).map({
            let mut r = SeededRng::new(7, 1);
            move |_| r.next_u64()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = SeededRng::new(7, 1);
            move |_| r.next_u64()
        }).collect();
        let c: Vec<u64> = (0..4).map({
            let mut r = SeededRng::new(7, 2);
            move |_| r.next_u64()
        }).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn index_stays_in_range_and_covers() {
        let mut r = SeededRng::new(1, 0);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[r.index(5)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800), "{seen:?}");
        assert_eq!(r.index(1), 0);
    }

    #[test]
    fn weighted_index_skips_zero_weights() {
        let mut r = SeededRng::new(3, 0);
        for _ in 0..200 {
            assert_eq!(r.weighted_index(&[0.0, 2.0, 0.0]), Some(1));
        }
        assert_eq!(r.weighted_index(&[0.0, 0.0]), None);
    }
}
