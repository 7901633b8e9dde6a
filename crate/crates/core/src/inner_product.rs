//! Weighted operator inner products and the Kubo similarity transformation.
//!
//! All α-integrals are evaluated in closed form in the eigenbasis of the
//! weight: `∫₀¹ a^α b^{1-α} dα = L(a, b)`, the logarithmic mean.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Eigh};
use crate::operator::{DensityMatrix, HermitianOperator, Superoperator};
use crate::scalar::{cr, log_mean_from_logs, Real, C};
use crate::thermal::{check_beta, floored_logs};

/// Positive definite weight state with cached eigendecomposition and
/// logarithms of its eigenvalues.
#[derive(Debug, Clone)]
pub struct Weight<T: Real> {
    eig: Eigh<T>,
    logs: Vec<T>,
    floored: usize,
}

impl<T: Real> Weight<T> {
    /// From a density matrix; eigenvalues below the floor are raised to it
    /// and counted.
    pub fn from_density(rho: &DensityMatrix<T>) -> Self {
        let eig = rho.eigh();
        let (logs, floored) = floored_logs(&eig.values);
        let values = logs.iter().map(|l| l.exp()).collect();
        Self { eig: Eigh { values, vectors: eig.vectors }, logs, floored }
    }

    /// Canonical state `e^{-βH}/Z` with exact logarithms `-β(E - E_min) - ln Z'`.
    pub fn gibbs(h: &HermitianOperator<T>, beta: T) -> Result<Self> {
        check_beta(beta)?;
        let eig = h.eigh();
        let emin = eig.min();
        let shifted: Vec<T> = eig.values.iter().map(|&e| -beta * (e - emin)).collect();
        let lnz = shifted.iter().map(|x| x.exp()).fold(T::zero(), |a, b| a + b).ln();
        let logs: Vec<T> = shifted.iter().map(|&x| x - lnz).collect();
        let values = logs.iter().map(|l| l.exp()).collect();
        Ok(Self { eig: Eigh { values, vectors: eig.vectors }, logs, floored: 0 })
    }

    pub fn dim(&self) -> usize {
        self.logs.len()
    }

    pub fn floored(&self) -> usize {
        self.floored
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eig.values
    }

    pub fn eigen(&self) -> &Eigh<T> {
        &self.eig
    }

    pub fn density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_trusted(self.eig.map_values(&self.eig.values))
    }

    /// `ϱ^a`.
    pub fn power(&self, a: T) -> CMatrix<T> {
        let w: Vec<T> = self.logs.iter().map(|&l| (a * l).exp()).collect();
        self.eig.map_values(&w)
    }

    /// `ln ϱ`.
    pub fn log(&self) -> CMatrix<T> {
        self.eig.map_values(&self.logs)
    }

    /// Matrix of logarithmic means `L(λ_m, λ_n)`.
    pub fn log_mean_factors(&self) -> DMatrix<T> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |m, k| log_mean_from_logs(self.logs[m], self.logs[k]))
    }

    fn check_dim(&self, x: &CMatrix<T>) -> Result<()> {
        if x.nrows() != self.dim() || x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.nrows() });
        }
        Ok(())
    }
}

/// `ΣX = ∫₀¹ ϱ^α X ϱ^{1-α} dα`, elementwise `X_mn · L(λ_m, λ_n)` in the
/// weight's eigenbasis.
pub fn sigma_transform<T: Real>(x: &CMatrix<T>, weight: &Weight<T>) -> Result<CMatrix<T>> {
    weight.check_dim(x)?;
    let mut y = weight.eig.to_eigenbasis(x);
    let l = weight.log_mean_factors();
    y.zip_apply(&l, |z, f| *z *= cr(f));
    Ok(weight.eig.from_eigenbasis(&y))
}

/// Inverse of [`sigma_transform`]. Fails when the weight carries floored
/// eigenvalues, since the division factors are then not meaningful.
pub fn sigma_inverse<T: Real>(y: &CMatrix<T>, weight: &Weight<T>) -> Result<CMatrix<T>> {
    weight.check_dim(y)?;
    let l = weight.log_mean_factors();
    if weight.floored > 0 {
        let worst = l.iter().copied().fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b));
        return Err(Error::IllConditioned { what: "Σ inverse", condition: 1.0 / worst.to_f64_lossy() });
    }
    let mut x = weight.eig.to_eigenbasis(y);
    x.zip_apply(&l, |z, f| *z /= cr(f));
    Ok(weight.eig.from_eigenbasis(&x))
}

/// `∫₀¹ ϱ^α X ϱ^{1-α} dα` by Gauss-Legendre quadrature on matrix powers.
/// Independent of the closed form; used for cross-checks.
pub fn sigma_transform_quadrature<T: Real>(x: &CMatrix<T>, weight: &Weight<T>, nodes: usize) -> Result<CMatrix<T>> {
    weight.check_dim(x)?;
    let (a, w) = crate::quadrature::gauss_legendre_unit(nodes);
    let d = x.nrows();
    let mut acc = CMatrix::zeros(d, d);
    for (&alpha, &wi) in a.iter().zip(&w) {
        let al = T::lit(alpha);
        acc += weight.power(al) * x * weight.power(T::one() - al) * cr(T::lit(wi));
    }
    Ok(acc)
}

/// Operator inner product selector.
#[derive(Debug, Clone)]
pub enum InnerProductSpec<T: Real> {
    /// `Tr(X†Y)`.
    HilbertSchmidt,
    /// `Tr(ϱ^α X† ϱ^{1-α} Y)`, `α ∈ [0, 1]`.
    Deformed { alpha: T, weight: Weight<T> },
    /// `∫₀¹ Tr(ϱ^α X† ϱ^{1-α} Y) dα`.
    KuboAveraged { weight: Weight<T> },
    /// `Tr(ϱ X† Y)`.
    ClassicalWeighted { weight: Weight<T> },
}

impl<T: Real> InnerProductSpec<T> {
    pub fn deformed(alpha: T, weight: Weight<T>) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::InvalidArgument(format!("deformation {} outside [0, 1]", alpha.to_f64_lossy())));
        }
        Ok(Self::Deformed { alpha, weight })
    }

    pub fn name(&self) -> String {
        match self {
            Self::HilbertSchmidt => "hilbert_schmidt".into(),
            Self::Deformed { alpha, .. } => format!("deformed({})", alpha.to_f64_lossy()),
            Self::KuboAveraged { .. } => "kubo_averaged".into(),
            Self::ClassicalWeighted { .. } => "classical_weighted".into(),
        }
    }

    pub fn weight(&self) -> Option<&Weight<T>> {
        match self {
            Self::HilbertSchmidt => None,
            Self::Deformed { weight, .. } | Self::KuboAveraged { weight } | Self::ClassicalWeighted { weight } => {
                Some(weight)
            }
        }
    }

    /// The map `M` with `(X, Y) = Tr((M X)† Y)`.
    pub fn metric_map(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        match self {
            Self::HilbertSchmidt => Ok(x.clone()),
            Self::Deformed { alpha, weight } => {
                weight.check_dim(x)?;
                Ok(weight.power(T::one() - *alpha) * x * weight.power(*alpha))
            }
            Self::KuboAveraged { weight } => sigma_transform(x, weight),
            Self::ClassicalWeighted { weight } => {
                weight.check_dim(x)?;
                Ok(x * weight.power(T::one()))
            }
        }
    }

    /// Gram matrix `W` on column-stacked operators: `(X, Y) = vec(X)† W vec(Y)`.
    pub fn gram(&self, d: usize) -> Result<CMatrix<T>> {
        let m = Superoperator::try_from_map(d, |x| self.metric_map(x))?;
        Ok(m.matrix().adjoint())
    }
}

/// `(X, Y)` under the selected product.
pub fn inner_product<T: Real>(x: &CMatrix<T>, y: &CMatrix<T>, spec: &InnerProductSpec<T>) -> Result<C<T>> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.nrows() });
    }
    let mx = spec.metric_map(x)?;
    Ok((mx.adjoint() * y).trace())
}

/// Both sides of `-Σ[X, H] = (1/β)[X, ϱ_β]`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MiracleReport {
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub residual: f64,
}

/// `‖-Σ[X, H] - (1/β)[X, ϱ_β]‖_F` with `ϱ_β = e^{-βH}/Z`.
pub fn miracle_residual<T: Real>(x: &CMatrix<T>, h: &HermitianOperator<T>, beta: T) -> Result<MiracleReport> {
    let weight = Weight::gibbs(h, beta)?;
    let lhs = -sigma_transform(&linalg::commutator(x, h.matrix()), &weight)?;
    let rho = weight.density();
    let rhs = linalg::commutator(x, rho.matrix()) * cr(T::one() / beta);
    Ok(MiracleReport {
        lhs_norm: linalg::frobenius(&lhs).to_f64_lossy(),
        rhs_norm: linalg::frobenius(&rhs).to_f64_lossy(),
        residual: linalg::frobenius(&(lhs - rhs)).to_f64_lossy(),
    })
}
