//! Probe comparing the reduced Kubo transformation with the system-only one
//! for bipartite states that are diagonal in a product basis:
//! `ϱ = Σ_ij p_ij P_i ⊗ Q_j`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner_product::{sigma_transform, sigma_transform_quadrature, Weight};
use crate::linalg::{self, CMatrix};
use crate::operator::{DensityMatrix, HilbertLayout};
use crate::record::MatrixRecord;
use crate::scalar::{cr, log_mean, Real};
use crate::thermal::{check_beta, EIGEN_FLOOR};

/// Joint probabilities `p_ij` of a classical-classical bipartite state in the
/// computational product basis (rows: system, columns: environment).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalClassicalState<T: Real> {
    probabilities: DMatrix<T>,
}

impl<T: Real> ClassicalClassicalState<T> {
    pub fn new(probabilities: DMatrix<T>) -> Result<Self> {
        if probabilities.nrows() < 2 || probabilities.ncols() < 1 {
            return Err(Error::InvalidLayout("need at least a 2 × 1 probability table".into()));
        }
        if probabilities.iter().any(|&p| !(p >= T::zero()) || !p.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        let total = probabilities.sum();
        if (total - T::one()).abs() > T::structural_tol() {
            return Err(Error::InvalidArgument(format!("probabilities sum to {}", total.to_f64_lossy())));
        }
        Ok(Self { probabilities })
    }

    /// `p_i q_j` with the given marginals.
    pub fn product(system: &[T], env: &[T]) -> Result<Self> {
        Self::new(DMatrix::from_fn(system.len(), env.len(), |i, j| system[i] * env[j]))
    }

    pub fn probabilities(&self) -> &DMatrix<T> {
        &self.probabilities
    }

    pub fn layout(&self) -> HilbertLayout {
        HilbertLayout::new(self.probabilities.nrows(), self.probabilities.ncols()).expect("validated shape")
    }

    /// `p_i = Σ_j p_ij`.
    pub fn system_marginal(&self) -> Vec<T> {
        self.probabilities.row_iter().map(|r| r.sum()).collect()
    }

    /// `q_j = Σ_i p_ij`.
    pub fn env_marginal(&self) -> Vec<T> {
        self.probabilities.column_iter().map(|c| c.sum()).collect()
    }

    /// Product state with the same marginals.
    pub fn decorrelated(&self) -> Self {
        Self::product(&self.system_marginal(), &self.env_marginal()).expect("marginals of a valid state")
    }

    /// `(1 - ε)·self + ε·other`.
    pub fn mix(&self, other: &Self, eps: T) -> Result<Self> {
        if other.probabilities.shape() != self.probabilities.shape() {
            return Err(Error::DimensionMismatch { expected: self.probabilities.nrows(), found: other.probabilities.nrows() });
        }
        Self::new(&self.probabilities * (T::one() - eps) + &other.probabilities * eps)
    }

    pub fn density(&self) -> DensityMatrix<T> {
        let (ds, de) = self.probabilities.shape();
        let mut m = CMatrix::zeros(ds * de, ds * de);
        for i in 0..ds {
            for j in 0..de {
                m[(i * de + j, i * de + j)] = cr(self.probabilities[(i, j)]);
            }
        }
        DensityMatrix::from_trusted(m)
    }
}

/// Per-pair comparison of `Σ_j L(p_ij, p_kj)` with `L(p_i, p_k)`.
#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub i: usize,
    pub k: usize,
    pub joint_log_mean_sum: f64,
    pub marginal_log_mean: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixProbeReport {
    pub beta: f64,
    pub probabilities: Vec<Vec<f64>>,
    pub x_system: MatrixRecord,
    /// `-Tr_E ∫ ϱ^α [X_S ⊗ I, H*_S ⊗ I] ϱ^{1-α} dα` (closed form).
    pub reduced_form: MatrixRecord,
    /// `-∫ ϱ_S^α [X_S, H*_S] ϱ_S^{1-α} dα` (closed form).
    pub system_form: MatrixRecord,
    /// `(1/β)[X_S, ϱ_S]`, the Kubo-relation target of the system form.
    pub kubo_target: MatrixRecord,
    /// `‖reduced_form - system_form‖_F`.
    pub residual: f64,
    /// `‖system_form - kubo_target‖_F`.
    pub kubo_residual: f64,
    /// Largest deviation between closed-form and α-quadrature evaluations.
    pub quadrature_agreement: f64,
    pub pairs: Vec<PairRecord>,
    pub floored_probabilities: usize,
}

/// Number of Gauss-Legendre nodes in the α-quadrature cross-check.
pub const PROBE_QUADRATURE_NODES: usize = 64;

pub fn appendix_probe<T: Real>(state: &ClassicalClassicalState<T>, xs: &CMatrix<T>, beta: T) -> Result<AppendixProbeReport> {
    check_beta(beta)?;
    let layout = state.layout();
    let (ds, de) = (layout.dim_system(), layout.dim_env());
    if xs.nrows() != ds || xs.ncols() != ds {
        return Err(Error::DimensionMismatch { expected: ds, found: xs.nrows() });
    }
    let floor = T::lit(EIGEN_FLOOR);
    let mut floored = 0;
    let p = state.probabilities.map(|v| {
        if v < floor {
            floored += 1;
            floor
        } else {
            v
        }
    });
    let pi: Vec<T> = p.row_iter().map(|r| r.sum()).collect();
    // h_k = -(1/β) ln p_k with the additive constant dropped
    let h: Vec<T> = pi.iter().map(|&v| -v.ln() / beta).collect();

    let mut reduced = CMatrix::zeros(ds, ds);
    let mut system = CMatrix::zeros(ds, ds);
    let mut pairs = Vec::new();
    for i in 0..ds {
        for k in 0..ds {
            let joint = (0..de).fold(T::zero(), |acc, j| acc + log_mean(p[(i, j)], p[(k, j)]));
            let marginal = log_mean(pi[i], pi[k]);
            // [X, H*]_{ik} = X_ik (h_k - h_i)
            let comm = xs[(i, k)] * cr(h[k] - h[i]);
            reduced[(i, k)] = -comm * cr(joint);
            system[(i, k)] = -comm * cr(marginal);
            if i < k {
                pairs.push(PairRecord {
                    i,
                    k,
                    joint_log_mean_sum: joint.to_f64_lossy(),
                    marginal_log_mean: marginal.to_f64_lossy(),
                    difference: (joint - marginal).to_f64_lossy(),
                });
            }
        }
    }

    // independent route: full-space α-quadrature on ϱ^α and ϱ_S^α
    let hmf = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(ds, h.iter().map(|&v| cr(v))));
    let comm_s = linalg::commutator(xs, &hmf);
    let full_weight = Weight::from_density(&state_from(&p));
    let lifted = layout.lift_system(&comm_s)?;
    let reduced_quad = -layout.partial_trace_env(&sigma_transform_quadrature(&lifted, &full_weight, PROBE_QUADRATURE_NODES)?)?;
    let rho_s = DensityMatrix::from_trusted(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        ds,
        pi.iter().map(|&v| cr(v)),
    )));
    let sys_weight = Weight::from_density(&rho_s);
    let system_quad = -sigma_transform_quadrature(&comm_s, &sys_weight, PROBE_QUADRATURE_NODES)?;
    // closed forms through the generic Σ routine as a third evaluation
    let system_sigma = -sigma_transform(&comm_s, &sys_weight)?;
    let agreement = [
        linalg::frobenius(&(&reduced - &reduced_quad)),
        linalg::frobenius(&(&system - &system_quad)),
        linalg::frobenius(&(&system - &system_sigma)),
    ]
    .iter()
    .map(|v| v.to_f64_lossy())
    .fold(0.0, f64::max);

    let kubo_target = linalg::commutator(xs, rho_s.matrix()) * cr(T::one() / beta);
    Ok(AppendixProbeReport {
        beta: beta.to_f64_lossy(),
        probabilities: (0..ds).map(|i| (0..de).map(|j| state.probabilities[(i, j)].to_f64_lossy()).collect()).collect(),
        x_system: MatrixRecord::from_matrix(xs),
        residual: linalg::frobenius(&(&reduced - &system)).to_f64_lossy(),
        kubo_residual: linalg::frobenius(&(&system - &kubo_target)).to_f64_lossy(),
        reduced_form: MatrixRecord::from_matrix(&reduced),
        system_form: MatrixRecord::from_matrix(&system),
        kubo_target: MatrixRecord::from_matrix(&kubo_target),
        quadrature_agreement: agreement,
        pairs,
        floored_probabilities: floored,
    })
}

fn state_from<T: Real>(p: &DMatrix<T>) -> DensityMatrix<T> {
    let (ds, de) = p.shape();
    let total = p.sum();
    let mut m = CMatrix::zeros(ds * de, ds * de);
    for i in 0..ds {
        for j in 0..de {
            m[(i * de + j, i * de + j)] = cr(p[(i, j)] / total);
        }
    }
    DensityMatrix::from_trusted(m)
}
