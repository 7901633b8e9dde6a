//! Liouvillian superoperators and exact unitary evolution (ħ = 1).

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::operator::{DensityMatrix, HermitianOperator, Superoperator};
use crate::scalar::{ci, cr, Real, C};

/// `𝓛X = [H, X]`, so that `ρ̇ = -i𝓛ρ` and `Ḃ = i𝓛B`.
pub fn liouvillian<T: Real>(h: &HermitianOperator<T>) -> Superoperator<T> {
    Superoperator::commutator_generator(h.matrix()).scale(ci())
}

/// `ρ ↦ -i[H, ρ]`, the Schrödinger-picture generator `-i𝓛`.
pub fn schrodinger_generator<T: Real>(h: &HermitianOperator<T>) -> Superoperator<T> {
    Superoperator::commutator_generator(h.matrix())
}

/// `B ↦ i[H, B]`, the Heisenberg-picture generator `i𝓛`.
pub fn heisenberg_generator<T: Real>(h: &HermitianOperator<T>) -> Superoperator<T> {
    Superoperator::commutator_generator(h.matrix()).scale(cr(-T::one()))
}

/// `e^{-iHt}`.
pub fn propagator<T: Real>(h: &HermitianOperator<T>, t: T) -> CMatrix<T> {
    let eig = h.eigh();
    let phases: Vec<C<T>> = eig.values.iter().map(|&e| C::new((-e * t).cos(), (-e * t).sin())).collect();
    eig.map_complex(&phases)
}

/// `e^{-iHt} ρ₀ e^{iHt}`.
pub fn evolve_state<T: Real>(rho0: &DensityMatrix<T>, h: &HermitianOperator<T>, t: T) -> Result<DensityMatrix<T>> {
    if rho0.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: rho0.dim() });
    }
    if t < T::zero() {
        return Err(Error::InvalidArgument("evolution time must be non-negative".into()));
    }
    let u = propagator(h, t);
    let rho = &u * rho0.matrix() * u.adjoint();
    Ok(DensityMatrix::from_trusted(crate::linalg::hermitian_part(&rho)))
}
