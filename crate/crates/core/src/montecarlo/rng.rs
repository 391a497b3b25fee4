//! Counter-based SplitMix64 streams.
//!
//! Output `k` (k = 0, 1, …) of the stream with key `key` is
//!
//! ```text
//! mix64(mix64(key) + (k + 1)·0x9E3779B97F4A7C15)      (wrapping arithmetic)
//! mix64(z) = let z = (z ^ z>>30)·0xBF58476D1CE4E5B9;
//!            let z = (z ^ z>>27)·0x94D049BB133111EB;
//!            z ^ z>>31
//! ```
//!
//! so every draw is a pure function of `(key, k)`. Path `i` of a batch with
//! seed `seed` uses key `seed ^ i`. Uniform reals are `(x >> 11)·2^-53`.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    base: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng {
            base: mix64(key),
            counter: 0,
        }
    }

    /// Stream for path `index` of a batch seeded with `seed`.
    pub fn for_path(seed: u64, index: u64) -> Self {
        CounterRng::new(seed ^ index)
    }

    /// Output `k` of the stream with the given key.
    pub fn at(key: u64, k: u64) -> u64 {
        mix64(mix64(key).wrapping_add((k + 1).wrapping_mul(GAMMA)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.base.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
