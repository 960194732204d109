//! Seed derivation.
//!
//! Every random draw comes from a ChaCha8 generator keyed by the scenario's
//! master seed. Independent streams are selected with ChaCha's 64-bit stream
//! id, `trial << 8 | purpose`, so trial `t` sees the same numbers no matter
//! how many trials run or in which order they execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use num_complex::Complex64;

/// What a random stream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Channel = 1,
    Data = 2,
    Noise = 3,
    PilotNoise = 4,
    Pilots = 5,
    /// Symbols of the held-out packet used to score blind tracking.
    HoldoutData = 6,
    HoldoutNoise = 7,
}

pub fn stream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | purpose as u64);
    rng
}

/// Seed for point `index` of a sweep.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) & i64::MAX as u64
}

/// Circularly-symmetric complex Gaussian with variance `var`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}
