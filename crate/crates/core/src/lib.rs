//! Finite-dimensional operator algebra for projection-operator studies of
//! open quantum systems: Gibbs states and the Hamiltonian of mean force,
//! Kubo-type inner products, the reduced-system projector built from them,
//! time-local generators of reduced dynamics and their minimal-dissipation
//! splitting.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the usual double-precision choice.

pub mod appendix;
pub mod decomposition;
pub mod dynamics;
pub mod error;
pub mod grabert;
pub mod inner_product;
pub mod linalg;
pub mod operator;
pub mod quadrature;
pub mod record;
pub mod scalar;
pub mod spectral;
pub mod tcl;
pub mod thermal;

pub use appendix::{appendix_probe, AppendixProbeReport, ClassicalClassicalState};
pub use decomposition::{verify_propagator_decomposition, DecompositionConfig, DecompositionReport};
pub use dynamics::{evolve_state, heisenberg_generator, liouvillian, propagator, schrodinger_generator};
pub use error::{Error, Result};
pub use grabert::{drift_term_quantum, necessary_condition_residual, GrabertProjector, QuantumDrift};
pub use inner_product::{inner_product, miracle_residual, sigma_transform, InnerProductSpec, Weight};
pub use linalg::{CMatrix, CVector};
pub use operator::{DensityMatrix, HermitianOperator, HilbertLayout, Superoperator};
pub use record::MatrixRecord;
pub use scalar::{log_mean, Real, C};
pub use spectral::{spectral_decomposition, SpectralProjector};
pub use tcl::{
    compare_heff_hmf, reduced_map, split_minimal_dissipation, tcl_generator, work_flux, DynamicalMapSeries,
    GeneratorConfig, GeneratorSeries, GeneratorSplit, ReducedDynamics,
};
pub use thermal::{
    free_energy, gibbs_state, hamiltonian_of_mean_force, CompositeHamiltonian, MeanForceHamiltonian,
};

pub type HermitianOperator64 = HermitianOperator<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type Superoperator64 = Superoperator<f64>;
pub type CompositeHamiltonian64 = CompositeHamiltonian<f64>;
pub type Weight64 = Weight<f64>;
pub type InnerProductSpec64 = InnerProductSpec<f64>;
pub type CMatrix64 = CMatrix<f64>;
pub type HermitianOperator32 = HermitianOperator<f32>;
pub type DensityMatrix32 = DensityMatrix<f32>;
pub type CMatrix32 = CMatrix<f32>;
