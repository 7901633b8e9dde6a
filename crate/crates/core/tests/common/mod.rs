#![allow(dead_code)]

use meanforce_core::{CMatrix, DensityMatrix, HermitianOperator, C};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre(rng: &mut ChaCha8Rng, d: usize) -> CMatrix<f64> {
    CMatrix::from_fn(d, d, |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator<f64> {
    let g = ginibre(rng, d);
    HermitianOperator::new((&g + g.adjoint()) * C::new(0.5, 0.0)).unwrap()
}

pub fn random_density(rng: &mut ChaCha8Rng, d: usize) -> DensityMatrix<f64> {
    let g = ginibre(rng, d);
    let m = &g * g.adjoint() + CMatrix::<f64>::identity(d, d) * C::new(0.05, 0.0);
    DensityMatrix::normalized(m).unwrap()
}

pub fn max_abs(m: &CMatrix<f64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn sigma_x() -> CMatrix<f64> {
    meanforce_core::operator::pauli::x()
}

pub fn sigma_z() -> CMatrix<f64> {
    meanforce_core::operator::pauli::z()
}

/// Random Hermitian matrix with unit Frobenius norm.
pub fn unit_hermitian(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator<f64> {
    let h = random_hermitian(rng, d);
    let n = h.matrix().norm();
    h.scaled(1.0 / n)
}
