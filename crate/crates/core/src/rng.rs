//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed (via
//! `SeedableRng::seed_from_u64`), and normals come from the ziggurat sampler
//! of `rand_distr::StandardNormal`. Both are fully specified algorithms, so
//! paths are reproducible across platforms. Replication `i` of a study with
//! master seed `s` uses seed `s + i` (wrapping).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn derive_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add(index as u64)
}

#[inline]
pub fn standard_normal<T: Scalar>(rng: &mut StreamRng) -> T {
    let z: f64 = rng.sample(StandardNormal);
    T::lit(z)
}
