//! Classical phase-space models: canonical sampling, histogram estimates of
//! the Hamiltonian of mean force, and checks of the Zwanzig projector.
//!
//! Observables evolve as `dA/dt = {A, H}` with
//! `{f, g} = Σ (∂f/∂q ∂g/∂p - ∂f/∂p ∂g/∂q)`.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod mean_force;
pub mod observables;
pub mod oracle;
pub mod relevant;
pub mod sampling;
pub mod system;
pub mod zwanzig;

pub use dynamics::{evolve, integrate_trajectory, Integrator, QuadraticFlow, Stepper, Trajectory, DEFAULT_DT};
pub use error::{Error, Result};
pub use grid::{Axis, BinGrid, BinnedField, DEFAULT_BINS_PER_AXIS};
pub use mean_force::{
    density, density_rate, drift_from_hmf, estimate_hmf, estimate_p_alpha_t, fit_quadratic, free_energy, free_energy_pinned, gradient,
    mean_force, relevant_density_drift, DensitySeries, FreeEnergy, GradientField, HmfEstimate, PinnedFreeEnergy, QuadraticFit,
};
pub use observables::{liouvillian_drift, poisson_bracket, Coordinate, FnObservable, Observable, Polynomial};
pub use oracle::{
    gaussian_as_separable, gaussian_hmf_oracle, quartic_hmf_closed_form, quartic_hmf_quadrature, GaussianHmf,
    QuadratureConfig, SeparableHmf,
};
pub use relevant::RelevantSet;
pub use sampling::{sample_canonical, statistical_inefficiency, ChainDiagnostics, SampleSet, SamplerConfig};
pub use system::{gradient_self_test, ClassicalSystem, CoupledOscillators, FunctionSystem, OscillatorParams};
pub use zwanzig::{
    adjoint_consistency, adjoint_of_weighted, adjoint_project, compare_fields, conditional_drift, drift_residual_report,
    interior_mask, mori_project, norm_compare, pythagoras, zwanzig_project, DriftResidualReport, FieldComparison,
    MoriProjection, NormComparison, ProjectedObservable, DEFAULT_MIN_COUNT, SIGMA_LEVEL,
};
