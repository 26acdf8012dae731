//! Deterministic random streams.
//!
//! Every stochastic routine draws from an [`RngStream`], a ChaCha8 keystream
//! (counter based: the output at word `i` is a pure function of key, stream id
//! and `i`). Streams are derived from a master seed plus a path of integer
//! labels (replicate index, level, block, ...), so parallel replicates get
//! their randomness independently of scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    /// Stream for `(seed, labels...)`.
    pub fn derive(seed: u64, labels: &[u64]) -> Self {
        let mut h = splitmix64(seed ^ 0x5EED_0F_A11_u64);
        for &l in labels {
            h = splitmix64(h ^ splitmix64(l.wrapping_add(0xA5A5_A5A5)));
        }
        let mut key = [0u8; 32];
        let mut w = h;
        for chunk in key.chunks_exact_mut(8) {
            w = splitmix64(w);
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(labels.len() as u64);
        RngStream { inner }
    }

    pub fn new(seed: u64) -> Self {
        Self::derive(seed, &[])
    }

    /// Child stream; does not advance `self`.
    pub fn child(&self, seed: u64, labels: &[u64]) -> Self {
        Self::derive(seed, labels)
    }

    /// Uniform on `[0, 1)`; consumes one 64-bit word.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`; consumes one 64-bit word.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        // 53 random bits centered in their cell
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}
