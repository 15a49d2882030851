//! Seed derivation. Every random stream in the crate is derived from a single
//! root seed so that stages can be rerun independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stage tags mixed into the root seed.
pub mod stage {
    pub const FACTOR: u64 = 0x6661_6374;
    pub const WALKS: u64 = 0x7761_6c6b;
    pub const TRAIN: u64 = 0x7472_6169;
    pub const SPLIT: u64 = 0x7370_6c74;
    pub const EVAL: u64 = 0x6576_616c;
}

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `parts` into `root`, order-sensitively.
pub fn derive(root: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(root), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn stage_rng(root: u64, stage: u64) -> Rng {
    rng(derive(root, &[stage]))
}
