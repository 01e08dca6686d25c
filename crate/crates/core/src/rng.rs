//! Seeded randomness.
//!
//! Every random fixture is drawn from `ChaCha8Rng`, whose output stream is
//! specified independently of platform and word size, so a given seed yields
//! bit-identical matrices, datasets and initializations everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a decorrelated seed for grid cell `(i, j)` of a run seeded with `seed`.
pub fn cell_seed(seed: u64, i: usize, j: usize) -> u64 {
    let h = splitmix64(seed);
    let h = splitmix64(h ^ (i as u64));
    splitmix64(h ^ (j as u64).rotate_left(32))
}
