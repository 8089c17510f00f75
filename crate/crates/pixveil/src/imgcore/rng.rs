//! Deterministic, platform-independent randomness.
//!
//! Every stream is a ChaCha8 generator keyed by four 64-bit words, so two
//! runs with the same words produce the same permutations and noise matrices
//! on every platform. Parallel tasks never share a generator; each derives
//! its own stream from `(seed, stream_id)` or a longer word tuple.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone)]
pub struct Rng {
    words: [u64; 4],
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Rng::from_words([seed, stream_id, 0, 0])
    }

    /// Keys a stream with a full 256-bit word tuple. Distinct tuples give
    /// independent streams by construction (no hashing, no collisions).
    pub fn from_words(words: [u64; 4]) -> Self {
        let mut key = [0u8; 32];
        for (chunk, word) in key.chunks_exact_mut(8).zip(words.iter()) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Rng {
            words,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// The words this stream was keyed with (recorded in private manifests).
    pub fn identity(&self) -> [u64; 4] {
        self.words
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform index from `[0, n)`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        slice.shuffle(&mut self.inner);
    }

    /// Picks one element uniformly. Panics on an empty slice.
    pub fn pick<'a, T>(&mut self, slice: &'a [T]) -> &'a T {
        &slice[self.index(slice.len())]
    }

    /// Fills `out` with independent N(0, sigma²) draws. `sigma` must be > 0.
    pub fn fill_normal(&mut self, sigma: f64, out: &mut [f64]) {
        let normal = Normal::new(0.0, sigma).expect("sigma must be positive and finite");
        for v in out.iter_mut() {
            *v = normal.sample(&mut self.inner);
        }
    }

    /// Chooses `k` distinct indices from `[0, n)` uniformly without
    /// replacement (partial Fisher-Yates). Order of the result is arbitrary
    /// but deterministic.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
