//! The toolkit's single PRNG: ChaCha20 seeded from a 64-bit value.
//!
//! Per-trial seeds are `splitmix64(seed_base ^ trial_index)`, so trial `i`
//! draws the same numbers whichever thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(seed_base: u64, trial_index: u64) -> u64 {
    splitmix64(seed_base ^ trial_index)
}

/// Independent sub-stream for a named purpose within one trial.
pub fn substream(seed: u64, tag: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(tag)))
}
