//! Seeded random inputs: polynomial fields and sample points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::geometry::multi_indices;

pub type SceneRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SceneRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A sparse polynomial of total degree ≤ `degree` in `vars` with `terms`
/// monomials (drawn with repetition) and coefficients uniform in
/// `[−amplitude, amplitude]`.
pub fn polynomial(rng: &mut SceneRng, vars: &[&str], degree: usize, terms: usize, amplitude: f64) -> Expr {
    let mut monomials: Vec<Vec<usize>> = vec![vec![]];
    monomials.extend(multi_indices(vars.len(), degree));
    Expr::sum((0..terms).map(|_| {
        let idx = &monomials[rng.random_range(0..monomials.len())];
        let coeff = rng.random_range(-amplitude..=amplitude);
        idx.iter()
            .fold(Expr::constant(coeff), |acc, &i| Expr::mul(acc, Expr::var(vars[i - 1])))
    }))
}

/// A point uniform in the box `[lo, hi]^N`.
pub fn point<const N: usize>(rng: &mut SceneRng, lo: f64, hi: f64) -> [f64; N] {
    std::array::from_fn(|_| rng.random_range(lo..=hi))
}

pub fn uniform(rng: &mut SceneRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}
