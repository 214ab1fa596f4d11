//! Seed derivation for independent random streams.
//!
//! Every parallel unit of work (a tree, an agent, a fold) draws from its own
//! ChaCha stream keyed by the master seed and the unit's coordinates, so
//! results never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `seed`, giving a new well-scrambled seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, parts))
}

/// Domain tags so streams drawn for different purposes never collide.
pub(crate) mod tag {
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const TREE: u64 = 0x5452_4545;
    pub const ROUND: u64 = 0x524f_554e;
    pub const FOX_INIT: u64 = 0x464f_5849;
    pub const FOX_STEP: u64 = 0x464f_5853;
    pub const RANDOM_SEARCH: u64 = 0x5253_4541;
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const MODEL: u64 = 0x4d4f_444c;
    pub const SHAP: u64 = 0x5348_4150;
    pub const SYNTH: u64 = 0x5359_4e54;
}
