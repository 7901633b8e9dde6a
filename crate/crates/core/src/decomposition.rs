//! Numerical check of the projection-operator decomposition of the
//! propagator,
//!
//! `e^{Lt} = e^{Lt} P + ∫₀ᵗ e^{Ls} P L Q G(s,t) ds + Q G(0,t)`, `G(s,t) = e^{LQ(t-s)}`,
//!
//! with `L = i𝓛` the Heisenberg generator, and of its trace-adjoint
//! (Schrödinger-side) counterpart
//!
//! `e^{L‡t} = P‡ e^{L‡t} + G‡(t,0) Q‡ + ∫₀ᵗ G‡(t,s) Q‡ L‡ P‡ e^{L‡s} ds`, `G‡(t,s) = e^{Q‡L‡(t-s)}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operator::Superoperator;
use crate::quadrature::integrate_matrix;
use crate::scalar::{cr, Real};

/// Idempotence tolerance for the projector.
pub const IDEMPOTENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct DecompositionConfig {
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecompositionCheckpoint {
    pub time: f64,
    /// `‖lhs - rhs‖_F` of the Heisenberg-side identity.
    pub heisenberg_residual: f64,
    /// Same for the Schrödinger-side identity.
    pub schrodinger_residual: f64,
    /// `‖(rhs_H)‡ - rhs_S‖_F`.
    pub adjoint_consistency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub idempotence_defect: f64,
    pub checkpoints: Vec<DecompositionCheckpoint>,
    pub max_residual: f64,
}

fn expm<T: Real>(m: &CMatrix<T>, t: f64) -> CMatrix<T> {
    linalg::expm(&(m * cr(T::lit(t))))
}

/// Evaluates both identities at `n_checkpoints` equally spaced times in `(0, t]`
/// (or at `t = 0` alone when `t` is zero).
pub fn verify_propagator_decomposition<T: Real>(
    generator: &Superoperator<T>,
    projector: &Superoperator<T>,
    t: f64,
    n_checkpoints: usize,
    config: &DecompositionConfig,
) -> Result<DecompositionReport> {
    if generator.dim() != projector.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), found: projector.dim() });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("checkpoint horizon {t} must be finite and non-negative")));
    }
    let p = projector.matrix();
    let idempotence_defect = (p * p - p).norm().to_f64_lossy();
    if idempotence_defect > IDEMPOTENCE_TOL * p.norm().to_f64_lossy().max(1.0) {
        return Err(Error::InvalidArgument(format!("projector not idempotent: defect {idempotence_defect:.3e}")));
    }
    let n = generator.matrix().nrows();
    let id = linalg::identity::<T>(n);
    let l = generator.matrix().clone();
    let q = &id - p;
    let lq = &l * &q;
    let pl_q = p * &l * &q;

    let l_adj = generator.trace_adjoint().matrix().clone();
    let p_adj = projector.trace_adjoint().matrix().clone();
    let q_adj = &id - &p_adj;
    let ql_adj = &q_adj * &l_adj;
    let ql_p_adj = &q_adj * &l_adj * &p_adj;

    let times: Vec<f64> =
        if t == 0.0 { vec![0.0] } else { (1..=n_checkpoints.max(1)).map(|k| t * k as f64 / n_checkpoints.max(1) as f64).collect() };
    let mut checkpoints = Vec::with_capacity(times.len());
    for &tk in &times {
        let lhs = expm(&l, tk);
        let integral = if tk == 0.0 {
            CMatrix::zeros(n, n)
        } else {
            integrate_matrix(|s| Ok(expm(&l, s) * &pl_q * expm(&lq, tk - s)), 0.0, tk, config.abs_tol, config.max_intervals)?
        };
        let rhs = &lhs * p + &integral + &q * expm(&lq, tk);

        let lhs_s = expm(&l_adj, tk);
        let integral_s = if tk == 0.0 {
            CMatrix::zeros(n, n)
        } else {
            integrate_matrix(
                |s| Ok(expm(&ql_adj, tk - s) * &ql_p_adj * expm(&l_adj, s)),
                0.0,
                tk,
                config.abs_tol,
                config.max_intervals,
            )?
        };
        let rhs_s = &p_adj * &lhs_s + expm(&ql_adj, tk) * &q_adj + &integral_s;

        let rhs_h_adj = Superoperator::from_matrix(rhs.clone(), generator.dim())?.trace_adjoint();
        checkpoints.push(DecompositionCheckpoint {
            time: tk,
            heisenberg_residual: (&lhs - &rhs).norm().to_f64_lossy(),
            schrodinger_residual: (&lhs_s - &rhs_s).norm().to_f64_lossy(),
            adjoint_consistency: (rhs_h_adj.matrix() - &rhs_s).norm().to_f64_lossy(),
        });
    }
    let max_residual = checkpoints
        .iter()
        .flat_map(|c| [c.heisenberg_residual, c.schrodinger_residual, c.adjoint_consistency])
        .fold(0.0, f64::max);
    Ok(DecompositionReport { idempotence_defect, checkpoints, max_residual })
}
