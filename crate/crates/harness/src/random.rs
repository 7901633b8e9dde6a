//! Seeded random instances. Every pipeline draws from its own ChaCha8 stream
//! of the scenario seed, so adding a check to one pipeline never shifts the
//! numbers of another.

use meanforce_core::{CMatrix, DensityMatrix, HermitianOperator, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Streams below 1000 belong to the Metropolis chains.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(1000 + stream);
    r
}

pub fn ginibre(rng: &mut ChaCha8Rng, d: usize) -> CMatrix<f64> {
    CMatrix::from_fn(d, d, |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn hermitian(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator<f64> {
    let g = ginibre(rng, d);
    HermitianOperator::new((&g + g.adjoint()) * C::new(0.5, 0.0)).expect("Hermitian part")
}

/// Random Hermitian matrix with unit Frobenius norm.
pub fn unit_hermitian(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator<f64> {
    let h = hermitian(rng, d);
    let n = h.matrix().norm();
    h.scaled(1.0 / n)
}

/// Full-rank density matrix `(GG† + 0.05)/Tr`.
pub fn density(rng: &mut ChaCha8Rng, d: usize) -> DensityMatrix<f64> {
    let g = ginibre(rng, d);
    let m = &g * g.adjoint() + CMatrix::<f64>::identity(d, d) * C::new(0.05, 0.0);
    DensityMatrix::normalized(m).expect("positive definite")
}

/// Probability vector with entries bounded away from zero.
pub fn probabilities(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn dim(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}
