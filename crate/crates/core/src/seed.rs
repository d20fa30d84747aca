//! Seed splitting.
//!
//! Every random stream in the crate is derived from one user seed. A stage
//! (or repetition, or image) index is mixed into the seed with the SplitMix64
//! finalizer, and the result seeds a ChaCha8 generator:
//!
//! ```text
//! derive(seed, stage) = splitmix64(seed ^ splitmix64(stage + 0x9E3779B97F4A7C15))
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage tags used by the pipeline. Values are part of the reproducibility
/// contract and must not be renumbered.
pub mod stage {
    pub const SYNTH: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const FUSION_INIT: u64 = 3;
    pub const REPETITION: u64 = 4;
    pub const FUSION_RESTART: u64 = 5;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, stage: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stage.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
