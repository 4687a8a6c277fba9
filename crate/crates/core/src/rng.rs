//! Seeded randomness.
//!
//! Every sampling routine takes an explicit generator; nothing reads global
//! state. Generators are ChaCha8 streams, so a single seed can be split into
//! independent streams with [`split`], and experiment grids derive per-trial
//! seeds with [`derive_seed`].

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, C64};
#[allow(unused_imports)]
use num_traits::Float;

pub use rand::SeedableRng;

/// The generator type used across the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn split(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer. A bijection on `u64`.
pub const fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// 64-bit FNV-1a hash of a label.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for trial `trial` of grid point `point` in `scenario`.
///
/// `mix64(k ^ mix64(point << 32 | trial))` with `k` fixed by the base seed and
/// scenario label. For a fixed `(base, scenario)` the map from `(point, trial)`
/// to the derived seed is a composition of bijections and hence injective.
pub fn derive_seed(base: u64, scenario: &str, point: u32, trial: u32) -> u64 {
    let key = mix64(base ^ label_hash(scenario));
    let index = (u64::from(point) << 32) | u64::from(trial);
    mix64(key ^ mix64(index))
}

/// One draw from CN(0, `variance`): independent real and imaginary parts
/// with variance `variance / 2` each.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(scale * re, scale * im)
}

/// Matrix with i.i.d. CN(0, `variance`) entries, drawn in column-major order.
pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, variance))
}
