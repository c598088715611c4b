//! Seed derivation. Every random stream in a run is derived from the run
//! seed plus a tag, so parallel and serial evaluation draw identical numbers.

use rand::SeedableRng;

use crate::Rng;

/// Stream tag for the train/validation shuffle.
pub const SPLIT_STREAM: u64 = 0x0053_504c_4954;
/// Stream tag for the genetic operators.
pub const GA_STREAM: u64 = 0x4741;
/// Stream tag for chromosome evaluation.
pub const EVAL_STREAM: u64 = 0x4556_414c;

/// SplitMix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

/// Seed for the `index`-th evaluation of `generation` (0 = initial population).
pub fn evaluation_seed(run_seed: u64, generation: usize, index: usize) -> u64 {
    derive(run_seed, &[EVAL_STREAM, generation as u64, index as u64])
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
