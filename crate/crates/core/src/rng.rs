//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a tuple of integers hashed
//! down to a single ChaCha seed, so results never depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used when deriving component seeds from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Scene = 1,
    Fpn = 2,
    Gain = 3,
    TemporalNoise = 4,
    Shift = 5,
    SweepCell = 6,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed` one word at a time.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn stage_seed(master: u64, stage: Stage) -> u64 {
    derive_seed(master, &[stage as u64])
}

pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}
