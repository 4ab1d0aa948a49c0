//! Deterministic simulation RNG with a frozen draw algebra.
//!
//! Every random decision in a run is derived from a single ChaCha8 stream,
//! one 64-bit word per draw. The mapping from words to draws is fixed here
//! and recorded in run manifests as [`RNG_ALGORITHM`], so a run is fully
//! reproducible from `(config, seed)` alone:
//!
//! - seed expansion: the 64-bit seed is stretched to the 32-byte ChaCha key
//!   with four rounds of SplitMix64 (little-endian);
//! - `coin`: word & 1;
//! - `index_below(n)` / offsets: word mod n (bias ≤ n / 2^64, negligible for
//!   the ranges used here);
//! - `angle_deg`: top 53 bits scaled to [0, 360).
//!
//! The draw counter exists so the scheduler's draw-order contract (one
//! shuffle pass, then per particle: one offset draw, at most one steering
//! coin, at most one collision heading) can be asserted exactly in tests.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Identity string recorded in run manifests.
pub const RNG_ALGORITHM: &str = "chacha8/splitmix64-seed/word-draws/v1";

const TWO_POW_53: f64 = 9_007_199_254_740_992.0;

/// Seeded deterministic generator; one `u64` word consumed per draw.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
    draws: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        SimRng {
            inner: ChaCha8Rng::from_seed(key),
            draws: 0,
        }
    }

    /// Total words drawn since construction.
    pub fn draw_count(&self) -> u64 {
        self.draws
    }

    fn next_word(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    /// Fair binary choice.
    pub fn coin(&mut self) -> bool {
        self.next_word() & 1 == 1
    }

    /// Uniform index in `[0, n)`.
    pub fn index_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "index_below requires n > 0");
        (self.next_word() % n as u64) as usize
    }

    /// Uniform integer in `[min, max]` inclusive.
    pub fn int_in(&mut self, min: u32, max: u32) -> u32 {
        debug_assert!(min <= max);
        min + (self.next_word() % (max - min + 1) as u64) as u32
    }

    /// Uniform angle in `[0, 360)` degrees.
    pub fn angle_deg(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * (360.0 / TWO_POW_53)
    }

    /// In-place Fisher-Yates shuffle; exactly `len - 1` draws (0 for len ≤ 1).
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.index_below(i + 1);
            slice.swap(i, j);
        }
    }
}
