//! Gibbs states, partial traces and the Hamiltonian of mean force.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operator::{DensityMatrix, HermitianOperator, HilbertLayout};
use crate::scalar::Real;

/// Eigenvalue floor applied before logarithms or negative powers of
/// density-matrix eigenvalues.
pub const EIGEN_FLOOR: f64 = 1e-14;

/// Floors eigenvalues at [`EIGEN_FLOOR`] and returns their logarithms with the
/// number of floored entries.
pub fn floored_logs<T: Real>(values: &[T]) -> (Vec<T>, usize) {
    let floor = T::lit(EIGEN_FLOOR);
    let mut hits = 0;
    let logs = values
        .iter()
        .map(|&v| {
            if v < floor {
                hits += 1;
                floor.ln()
            } else {
                v.ln()
            }
        })
        .collect();
    (logs, hits)
}

/// `H = H_S ⊗ I + I ⊗ H_E + H_SE`.
#[derive(Debug, Clone)]
pub struct CompositeHamiltonian<T: Real> {
    pub layout: HilbertLayout,
    pub system: HermitianOperator<T>,
    pub env: HermitianOperator<T>,
    pub coupling: HermitianOperator<T>,
}

impl<T: Real> CompositeHamiltonian<T> {
    pub fn new(
        layout: HilbertLayout,
        system: HermitianOperator<T>,
        env: HermitianOperator<T>,
        coupling: HermitianOperator<T>,
    ) -> Result<Self> {
        if system.dim() != layout.dim_system() {
            return Err(Error::DimensionMismatch { expected: layout.dim_system(), found: system.dim() });
        }
        if env.dim() != layout.dim_env() {
            return Err(Error::DimensionMismatch { expected: layout.dim_env(), found: env.dim() });
        }
        if coupling.dim() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: coupling.dim() });
        }
        Ok(Self { layout, system, env, coupling })
    }

    pub fn uncoupled(layout: HilbertLayout, system: HermitianOperator<T>, env: HermitianOperator<T>) -> Result<Self> {
        let zero = HermitianOperator::zeros(layout.dim());
        Self::new(layout, system, env, zero)
    }

    /// Full-space Hamiltonian.
    pub fn total(&self) -> HermitianOperator<T> {
        let m = self.layout.lift_system(self.system.matrix()).unwrap()
            + self.layout.lift_env(self.env.matrix()).unwrap()
            + self.coupling.matrix();
        HermitianOperator::new(m)
            .and_then(|h| h.with_layout(self.layout))
            .expect("sum of Hermitian operators")
    }

    /// Adds `c·I` to the system part.
    pub fn shifted(&self, c: T) -> Self {
        let d = self.layout.dim_system();
        let sys = self.system.combine(T::one(), &HermitianOperator::identity(d), c).unwrap();
        Self { system: sys, ..self.clone() }
    }
}

/// `e^{-βH} / Tr e^{-βH}`, computed from the spectrum shifted by its minimum.
pub fn gibbs_state<T: Real>(h: &HermitianOperator<T>, beta: T) -> Result<DensityMatrix<T>> {
    check_beta(beta)?;
    let eig = h.eigh();
    let emin = eig.min();
    let w: Vec<T> = eig.values.iter().map(|&e| (-beta * (e - emin)).exp()).collect();
    let z: T = w.iter().copied().fold(T::zero(), |a, b| a + b);
    if !z.is_finite() || !(z > T::zero()) {
        return Err(Error::NonFinite("partition function"));
    }
    let w: Vec<T> = w.into_iter().map(|x| x / z).collect();
    Ok(DensityMatrix::from_trusted(eig.map_values(&w)))
}

/// `Tr_E X` for a full-space operator.
pub fn partial_trace_env<T: Real>(x: &CMatrix<T>, layout: &HilbertLayout) -> Result<CMatrix<T>> {
    layout.partial_trace_env(x)
}

/// Quantum Hamiltonian of mean force in the `Z*_S = Z / Z_E` gauge.
#[derive(Debug, Clone)]
pub struct MeanForceHamiltonian<T: Real> {
    /// `-(1/β) ln [Tr_E e^{-βH} / Tr e^{-βH_E}]`.
    pub operator: HermitianOperator<T>,
    /// `-(1/β) ln ϱ_{S,β}`: the same operator up to an additive constant.
    pub raw: HermitianOperator<T>,
    /// `Tr(H*_S) / d_S`, reported separately for gauge-insensitive comparisons.
    pub identity_component: T,
    /// `ln Z*_S = ln Z - ln Z_E`.
    pub log_partition: T,
    pub floored_eigenvalues: usize,
}

pub fn hamiltonian_of_mean_force<T: Real>(
    h: &CompositeHamiltonian<T>,
    beta: T,
) -> Result<MeanForceHamiltonian<T>> {
    check_beta(beta)?;
    let layout = h.layout;
    let full = h.total();
    let eig = full.eigh();
    let emin = eig.min();
    let shifted = eig.map(|e| (-beta * (e - emin)).exp());
    let reduced = linalg::hermitian_part(&layout.partial_trace_env(&shifted)?);
    let red_eig = linalg::eigh(&reduced);
    let scale = red_eig.max();
    if red_eig.min() < -T::structural_tol() * scale {
        return Err(Error::NotPositiveDefinite(red_eig.min().to_f64_lossy()));
    }
    let normalized: Vec<T> = red_eig.values.iter().map(|&v| v / scale).collect();
    let (logs, floored) = floored_logs(&normalized);

    let env_eig = h.env.eigh();
    let env_min = env_eig.min();
    let ln_ze: T = env_eig
        .values
        .iter()
        .map(|&e| (-beta * (e - env_min)).exp())
        .fold(T::zero(), |a, b| a + b)
        .ln()
        - beta * env_min;

    // ln Tr_E e^{-βH} = ln(reduced) - β emin, with reduced = scale · normalized
    let ln_scale = scale.ln();
    let hmf_vals: Vec<T> = logs
        .iter()
        .map(|&l| -(l + ln_scale - beta * emin - ln_ze) / beta)
        .collect();
    let operator = HermitianOperator::new(red_eig.map_values(&hmf_vals))?;

    let ln_z_shifted = normalized.iter().copied().fold(T::zero(), |a, b| a + b).ln();
    let raw_vals: Vec<T> = logs.iter().map(|&l| -(l - ln_z_shifted) / beta).collect();
    let raw = HermitianOperator::new(red_eig.map_values(&raw_vals))?;

    let ds = T::from_usize(layout.dim_system()).unwrap();
    let identity_component = operator.trace() / ds;
    let log_partition = ln_z_shifted + ln_scale - beta * emin - ln_ze;
    Ok(MeanForceHamiltonian { operator, raw, identity_component, log_partition, floored_eigenvalues: floored })
}

/// `F = -(1/β) ln Tr e^{-βH*}`.
pub fn free_energy<T: Real>(hmf: &HermitianOperator<T>, beta: T) -> Result<T> {
    check_beta(beta)?;
    let eig = hmf.eigh();
    let emin = eig.min();
    let z: T = eig.values.iter().map(|&e| (-beta * (e - emin)).exp()).fold(T::zero(), |a, b| a + b);
    Ok(emin - z.ln() / beta)
}

pub(crate) fn check_beta<T: Real>(beta: T) -> Result<()> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {}", beta.to_f64_lossy())));
    }
    Ok(())
}
