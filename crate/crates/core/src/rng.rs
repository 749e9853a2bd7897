//! Seed derivation for reproducible, independently-seeded work items.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a stream tag.
///
/// Distinct `(seed, tag)` pairs give statistically independent streams, so
/// trials and candidates never share RNG state.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix(mix(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng_from(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn child_rng(seed: u64, tag: u64) -> SimRng {
    rng_from(derive_seed(seed, tag))
}

/// Stream tags, kept distinct so that e.g. the scenario of trial 3 never
/// shares a stream with the analog initialization of candidate 3.
pub mod stream {
    pub const SCENARIO: u64 = 0x5C3A_0001;
    pub const ANALOG_INIT: u64 = 0xA7A1_0002;
    pub const RANDOM_SUBARRAY: u64 = 0x4A4D_0003;
    pub const DATASET_NOISE: u64 = 0xDA7A_0004;
    pub const ROBUSTNESS_NOISE: u64 = 0x20B5_0005;
    pub const ECHO_NOISE: u64 = 0xEC40_0006;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_tag_and_parent() {
        let a = derive_seed(7, 1);
        assert_ne!(a, derive_seed(7, 2));
        assert_ne!(a, derive_seed(8, 1));
        assert_eq!(a, derive_seed(7, 1));
    }
}
