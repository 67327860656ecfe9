//! Deterministic seeding.
//!
//! Trial `i` of an experiment with master seed `s` uses the ChaCha8 stream
//! seeded with `derive_seed(s, i)`, where
//!
//! ```text
//! derive_seed(s, i) = splitmix64(s ^ splitmix64(i ^ 0x5354_5321_5354_5321))
//! ```
//!
//! and `splitmix64` is the standard finaliser with increment
//! `0x9E37_79B9_7F4A_7C15`. This derivation is part of the output contract:
//! changing it changes every recorded fixture.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index ^ 0x5354_5321_5354_5321))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The stream for trial `index` under `master`.
pub fn trial_rng(master: u64, index: u64) -> Rng {
    rng_from_seed(derive_seed(master, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference splitmix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn trial_streams_are_stable_and_distinct() {
        let a: u64 = trial_rng(1, 0).gen();
        let b: u64 = trial_rng(1, 0).gen();
        let c: u64 = trial_rng(1, 1).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
