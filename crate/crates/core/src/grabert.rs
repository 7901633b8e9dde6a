//! Reduced Kubo transformation `Σ_S`, the Grabert projector onto system
//! operators, and the quantum drift term.

use nalgebra::SVD;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner_product::{sigma_transform, Weight};
use crate::linalg::{self, CMatrix};
use crate::operator::{DensityMatrix, HilbertLayout, Superoperator};
use crate::scalar::{ci, cr, Real};
use crate::thermal::{hamiltonian_of_mean_force, CompositeHamiltonian};

/// Condition number above which `Σ_S` is treated as singular.
pub const SIGMA_S_MAX_CONDITION: f64 = 1e10;

/// `Σ_S X_S = Tr_E(Σ(X_S ⊗ I_E))` materialized as a `d_S² × d_S²` matrix.
#[derive(Debug, Clone)]
pub struct ReducedSigma<T: Real> {
    layout: HilbertLayout,
    map: Superoperator<T>,
    svd: SVD<crate::scalar::C<T>, nalgebra::Dyn, nalgebra::Dyn>,
    condition: T,
}

impl<T: Real> ReducedSigma<T> {
    pub fn new(weight: &Weight<T>, layout: HilbertLayout) -> Result<Self> {
        if weight.dim() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: weight.dim() });
        }
        let map = Superoperator::try_from_map(layout.dim_system(), |xs| {
            let lifted = layout.lift_system(xs)?;
            layout.partial_trace_env(&sigma_transform(&lifted, weight)?)
        })?;
        let svd = SVD::new(map.matrix().clone(), true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > T::zero() { smax / smin } else { T::max_value().unwrap_or_else(T::one) };
        if condition.to_f64_lossy() > SIGMA_S_MAX_CONDITION {
            return Err(Error::IllConditioned { what: "Σ_S", condition: condition.to_f64_lossy() });
        }
        Ok(Self { layout, map, svd, condition })
    }

    pub fn condition_number(&self) -> T {
        self.condition
    }

    pub fn superoperator(&self) -> &Superoperator<T> {
        &self.map
    }

    pub fn apply(&self, xs: &CMatrix<T>) -> CMatrix<T> {
        self.map.apply(xs)
    }

    /// `Σ_S⁻¹ Y_S` by an SVD solve.
    pub fn solve(&self, ys: &CMatrix<T>) -> Result<CMatrix<T>> {
        let ds = self.layout.dim_system();
        if ys.nrows() != ds {
            return Err(Error::DimensionMismatch { expected: ds, found: ys.nrows() });
        }
        let b = linalg::vectorize(ys);
        let solve = |rhs: &crate::linalg::CVector<T>| {
            self.svd.solve(rhs, T::zero()).map_err(|e| Error::InvalidArgument(e.to_string()))
        };
        let mut x = solve(&b)?;
        // one step of iterative refinement
        let residual = &b - self.map.matrix() * &x;
        x += solve(&residual)?;
        Ok(linalg::unvectorize(&x, ds))
    }
}

/// `𝒫X = (Σ_S⁻¹ Tr_E(ΣX)) ⊗ I_E`, `𝒫†ρ = Σ((Σ_S⁻¹ Tr_E ρ) ⊗ I_E)`.
#[derive(Debug, Clone)]
pub struct GrabertProjector<T: Real> {
    weight: Weight<T>,
    layout: HilbertLayout,
    sigma_s: ReducedSigma<T>,
}

impl<T: Real> GrabertProjector<T> {
    pub fn new(weight: Weight<T>, layout: HilbertLayout) -> Result<Self> {
        let sigma_s = ReducedSigma::new(&weight, layout)?;
        Ok(Self { weight, layout, sigma_s })
    }

    pub fn reduced_sigma(&self) -> &ReducedSigma<T> {
        &self.sigma_s
    }

    pub fn weight(&self) -> &Weight<T> {
        &self.weight
    }

    /// System-space image `Σ_S⁻¹ Tr_E(ΣX)`.
    pub fn project_system(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        let reduced = self.layout.partial_trace_env(&sigma_transform(x, &self.weight)?)?;
        self.sigma_s.solve(&reduced)
    }

    pub fn project(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.layout.lift_system(&self.project_system(x)?)
    }

    pub fn adjoint(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        let ys = self.sigma_s.solve(&self.layout.partial_trace_env(rho)?)?;
        sigma_transform(&self.layout.lift_system(&ys)?, &self.weight)
    }

    /// Full-space superoperator of `𝒫`.
    pub fn superoperator(&self) -> Result<Superoperator<T>> {
        Superoperator::try_from_map(self.layout.dim(), |x| self.project(x))
    }
}

/// Both sides of `(1/β)Σ_S[X_S, ln ϱ_{S,β}] = (1/β)[X_S, ϱ_{S,β}]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NecessaryConditionReport {
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub residual: f64,
    pub condition_number: f64,
    pub floored_eigenvalues: usize,
}

pub fn necessary_condition_residual<T: Real>(
    xs: &CMatrix<T>,
    rho_beta: &DensityMatrix<T>,
    layout: HilbertLayout,
    beta: T,
) -> Result<NecessaryConditionReport> {
    crate::thermal::check_beta(beta)?;
    let weight = Weight::from_density(rho_beta);
    let reduced = Weight::from_density(&rho_beta.reduce_system(&layout)?);
    necessary_condition_with(xs, &weight, &reduced, layout, beta)
}

fn necessary_condition_with<T: Real>(
    xs: &CMatrix<T>,
    weight: &Weight<T>,
    reduced: &Weight<T>,
    layout: HilbertLayout,
    beta: T,
) -> Result<NecessaryConditionReport> {
    let sigma_s = ReducedSigma::new(weight, layout)?;
    let inv_beta = cr(T::one() / beta);
    let lhs = sigma_s.apply(&linalg::commutator(xs, &reduced.log())) * inv_beta;
    let rhs = linalg::commutator(xs, reduced.density().matrix()) * inv_beta;
    Ok(NecessaryConditionReport {
        lhs_norm: linalg::frobenius(&lhs).to_f64_lossy(),
        rhs_norm: linalg::frobenius(&rhs).to_f64_lossy(),
        residual: linalg::frobenius(&(lhs - rhs)).to_f64_lossy(),
        condition_number: sigma_s.condition_number().to_f64_lossy(),
        floored_eigenvalues: weight.floored() + reduced.floored(),
    })
}

/// Projected instantaneous drift `𝒫 i𝓛 X_S` for the Grabert projector and
/// its mean-force counterpart.
#[derive(Debug, Clone)]
pub struct QuantumDrift<T: Real> {
    /// `Σ_S⁻¹ (1/β)[X_S, ϱ_{S,β}]`, the drift before the factor `i`.
    pub pre_drift: CMatrix<T>,
    /// `i Σ_S⁻¹ (1/β)[X_S, ϱ_{S,β}]`.
    pub drift: CMatrix<T>,
    /// `i[H*_S, X_S]`, the Heisenberg generator of the mean-force Hamiltonian.
    pub mean_force_drift: CMatrix<T>,
    /// `‖drift - mean_force_drift‖_F`.
    pub difference: T,
    pub necessary_condition: NecessaryConditionReport,
}

pub fn drift_term_quantum<T: Real>(
    xs: &CMatrix<T>,
    hamiltonian: &CompositeHamiltonian<T>,
    beta: T,
) -> Result<QuantumDrift<T>> {
    let layout = hamiltonian.layout;
    let weight = Weight::gibbs(&hamiltonian.total(), beta)?;
    let rho_s = weight.density().reduce_system(&layout)?;
    let reduced = Weight::from_density(&rho_s);
    let sigma_s = ReducedSigma::new(&weight, layout)?;
    let comm = linalg::commutator(xs, rho_s.matrix()) * cr(T::one() / beta);
    let pre_drift = sigma_s.solve(&comm)?;
    let drift = &pre_drift * ci::<T>();
    let hmf = hamiltonian_of_mean_force(hamiltonian, beta)?;
    let mean_force_drift = linalg::commutator(hmf.operator.matrix(), xs) * ci::<T>();
    let difference = linalg::frobenius(&(&drift - &mean_force_drift));
    let necessary_condition = necessary_condition_with(xs, &weight, &reduced, layout, beta)?;
    Ok(QuantumDrift { pre_drift, drift, mean_force_drift, difference, necessary_condition })
}

/// Exact reduced equilibrium helper: `Tr_E e^{-βH}/Z`.
pub fn reduced_gibbs<T: Real>(hamiltonian: &CompositeHamiltonian<T>, beta: T) -> Result<DensityMatrix<T>> {
    Weight::gibbs(&hamiltonian.total(), beta)?.density().reduce_system(&hamiltonian.layout)
}

