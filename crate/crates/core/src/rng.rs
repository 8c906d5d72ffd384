//! The repo-wide deterministic random source.
//!
//! Generator: xoshiro256++ whose 256-bit state is expanded from a 64-bit seed
//! with SplitMix64. Bounded integers use Lemire's multiply-and-reject method,
//! unit floats take the top 53 bits of a draw, and normals use the Box-Muller
//! cosine branch. All three are fixed here so that any implementation of the
//! same steps reproduces the same streams.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// Deterministic random source. Never shared across workers; fork with [`derive_seed`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeededRng {
    inner: Xoshiro256PlusPlus,
}

/// Build a generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    SeededRng::new(seed)
}

/// Child seed for the sub-stream `tag` of `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let a = SplitMix64::seed_from_u64(seed).next_u64();
    SplitMix64::seed_from_u64(a ^ tag).next_u64()
}

/// Child seed keyed by a string (FNV-1a of the bytes, then [`derive_seed`]).
pub fn derive_seed_str(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    derive_seed(seed, h)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        // 1 - u lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.unit_f64();
        let u2 = self.unit_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }
}
