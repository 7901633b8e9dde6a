//! Spectral decomposition into eigenprojectors and the spectral analogue of
//! the Zwanzig projector.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operator::{DensityMatrix, HermitianOperator};
use crate::scalar::{cr, Real};

/// Default relative tolerance for grouping degenerate eigenvalues.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// `A = Σ_j a_j Π_j` with orthogonal eigenprojectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    pub eigenvalues: Vec<T>,
    pub projectors: Vec<CMatrix<T>>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn reconstruct(&self) -> CMatrix<T> {
        let d = self.projectors[0].nrows();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(CMatrix::zeros(d, d), |acc, (&a, p)| acc + p * cr(a))
    }
}

/// Groups eigenvalues whose consecutive gaps are below
/// `rel_tol · max(1, max|a|)`.
pub fn spectral_decomposition<T: Real>(a: &HermitianOperator<T>, rel_tol: T) -> SpectralDecomposition<T> {
    let eig = a.eigh();
    let d = a.dim();
    let scale = T::one().max(eig.min().abs().max(eig.max().abs()));
    let tol = rel_tol * scale;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..d {
        match groups.last_mut() {
            Some(g) if eig.values[k] - eig.values[*g.last().unwrap()] <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for g in groups {
        let n = T::from_usize(g.len()).unwrap();
        let mean = g.iter().map(|&k| eig.values[k]).fold(T::zero(), |s, v| s + v) / n;
        let mut p = CMatrix::zeros(d, d);
        for &k in &g {
            let v = eig.vectors.column(k);
            p += &v * v.adjoint();
        }
        eigenvalues.push(mean);
        projectors.push(p);
    }
    SpectralDecomposition { eigenvalues, projectors }
}

/// `𝒫B = Σ_j Tr(ϱΠ_jB)/Tr(ϱΠ_j) Π_j` and its adjoint
/// `𝒫†ρ = Σ_j Tr(ρΠ_j)/Tr(ϱΠ_j) ϱΠ_j`.
#[derive(Debug, Clone)]
pub struct SpectralProjector<T: Real> {
    decomposition: SpectralDecomposition<T>,
    weight: DensityMatrix<T>,
    weight_traces: Vec<T>,
}

impl<T: Real> SpectralProjector<T> {
    pub fn new(a: &HermitianOperator<T>, weight: &DensityMatrix<T>) -> Result<Self> {
        if a.dim() != weight.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: weight.dim() });
        }
        let decomposition = spectral_decomposition(a, T::lit(DEGENERACY_TOL));
        let mut weight_traces = Vec::with_capacity(decomposition.projectors.len());
        for p in &decomposition.projectors {
            let w = weight.expectation(p).re;
            if !(w > T::lit(1e3) * T::default_epsilon()) {
                return Err(Error::InvalidArgument(format!(
                    "weight assigns vanishing probability {} to an eigenspace",
                    w.to_f64_lossy()
                )));
            }
            weight_traces.push(w);
        }
        Ok(Self { decomposition, weight: weight.clone(), weight_traces })
    }

    pub fn decomposition(&self) -> &SpectralDecomposition<T> {
        &self.decomposition
    }

    pub fn project(&self, b: &CMatrix<T>) -> CMatrix<T> {
        let d = b.nrows();
        let rho = self.weight.matrix();
        self.decomposition
            .projectors
            .iter()
            .zip(&self.weight_traces)
            .fold(CMatrix::zeros(d, d), |acc, (p, &w)| {
                let num = (rho * p * b).trace();
                acc + p * (num / cr(w))
            })
    }

    pub fn adjoint(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let d = rho.nrows();
        let w_mat = self.weight.matrix();
        self.decomposition
            .projectors
            .iter()
            .zip(&self.weight_traces)
            .fold(CMatrix::zeros(d, d), |acc, (p, &w)| {
                let num = (rho * p).trace();
                acc + w_mat * p * (num / cr(w))
            })
    }

    /// `‖Tr_E(𝒫†ρ) - Tr_E ρ‖_F`; zero when the reduced state commutes with
    /// the relevant observable.
    pub fn reduced_state_defect(&self, rho: &DensityMatrix<T>, layout: &crate::operator::HilbertLayout) -> Result<T> {
        let projected = layout.partial_trace_env(&self.adjoint(rho.matrix()))?;
        let direct = layout.partial_trace_env(rho.matrix())?;
        Ok(linalg::frobenius(&(projected - direct)))
    }
}
