//! Seeded randomness with a stream that does not depend on `rand` internals.
//!
//! The generator is ChaCha8 (`rand_chacha`), whose output stream is fixed by
//! its algorithm. Floats and bounded integers are derived from raw `u64`
//! words by the conversions below, so the stream of Garnets and samples is
//! stable across dependency upgrades.
//!
//! Seed derivation is a counter scheme: `derive_seed(master, tag, index)`
//! feeds `master`, `tag` and `index` through SplitMix64 finalizers in turn.
//! Distinct `(tag, index)` pairs give unrelated ChaCha keys.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags used by the library and the experiment harness.
pub mod tags {
    pub const GARNET: u64 = 1;
    pub const SAMPLES: u64 = 2;
    pub const REPLICATE: u64 = 3;
    pub const POLICY_SAMPLING: u64 = 4;
    pub const NOISE: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn uniform01(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in the open interval `(0, 1)`.
pub fn uniform_open01(rng: &mut Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[lo, hi)`.
pub fn uniform_range(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Unbiased integer in `0..n` by rejection on the top of the `u64` range.
pub fn below(rng: &mut Rng, n: usize) -> usize {
    assert!(n > 0, "below(0)");
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % n) as usize;
        }
    }
}

/// `k` distinct indices from `0..n` in draw order (partial Fisher-Yates).
pub fn sample_without_replacement(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} distinct items from {n}");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + below(rng, n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_tag_and_index() {
        let a = derive_seed(7, tags::GARNET, 0);
        let b = derive_seed(7, tags::GARNET, 1);
        let c = derive_seed(7, tags::SAMPLES, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, tags::GARNET, 0));
    }

    #[test]
    fn chacha_stream_is_pinned() {
        // Guards against silent changes in the generator or its seeding.
        // Reference SplitMix64 output for state 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(0, 0, 0), splitmix64(splitmix64(splitmix64(0))));
        let mut rng = rng_from_seed(0);
        assert_eq!(rng.next_u64(), 0xB585_F767_A79A_3B6C);
    }

    #[test]
    fn uniform_ranges() {
        let mut rng = rng_from_seed(3);
        for _ in 0..10_000 {
            let u = uniform01(&mut rng);
            assert!((0.0..1.0).contains(&u));
            let v = uniform_open01(&mut rng);
            assert!(v > 0.0 && v < 1.0);
            assert!(below(&mut rng, 7) < 7);
        }
    }

    #[test]
    fn without_replacement_is_distinct() {
        let mut rng = rng_from_seed(11);
        for k in 0..=10 {
            let mut draw = sample_without_replacement(&mut rng, 10, k);
            assert_eq!(draw.len(), k);
            draw.sort_unstable();
            draw.dedup();
            assert_eq!(draw.len(), k);
        }
    }
}
