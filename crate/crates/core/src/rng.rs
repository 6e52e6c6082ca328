//! Seeded random streams.
//!
//! All randomness goes through [`SimRng`], ChaCha with 8 rounds from
//! `rand_chacha`. The algorithm is fully specified and platform independent,
//! so a given seed reproduces the same graph and trajectories everywhere.
//! Independent streams for the pipeline stages are obtained with
//! [`derive_seed`], which mixes a parent seed and a stage/replica tag through
//! the SplitMix64 finalizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `tag` of `parent`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix64(mix64(parent).wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)) ^ 0x5851_f42d_4c95_7f2d)
}

/// Exponential variate by inverse transform: `-ln(1 - U) / rate`, `U` in `[0, 1)`.
pub fn exp_variate<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Uniform index in `0..n` drawn through a `u64` range so the result does
/// not depend on the platform's pointer width.
pub fn index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n as u64) as usize
}
