//! Seeded point sources. Every stochastic routine in the crate owns its own
//! generator, seeded from the caller, so results are reproducible.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::vector::Vector;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index.wrapping_add(1));
    r
}

/// Standard normal vector; never returns the zero vector.
pub fn gaussian(rng: &mut Rng, dim: usize) -> Vector {
    loop {
        let v: Vector = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

pub fn uniform_box(rng: &mut Rng, half_widths: &[f64]) -> Vector {
    half_widths
        .iter()
        .map(|h| rng.random_range(-h..=*h))
        .collect()
}

pub fn unit(rng: &mut Rng) -> f64 {
    rng.random::<f64>()
}
