//! Seeded randomness.
//!
//! Every random draw in the crate flows from a `ChaCha8Rng` seeded with an
//! explicit `u64`; Gaussian variates use `rand_distr::StandardNormal`
//! (ziggurat). Sub-streams are derived with [`derive_seed`] so that adding a
//! new consumer never perturbs an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a stream label into a base seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_vec(rng: &mut SimRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| gaussian(rng)).collect()
}
