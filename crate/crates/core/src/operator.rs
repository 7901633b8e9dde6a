//! Operator and superoperator value types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::scalar::{cr, Real, C};

/// Bipartite system ⊗ environment split with system-first tensor ordering:
/// basis index `(i, k)` of the composite maps to `i * dim_env + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertLayout {
    dim_system: usize,
    dim_env: usize,
}

impl HilbertLayout {
    pub fn new(dim_system: usize, dim_env: usize) -> Result<Self> {
        if dim_system < 2 {
            return Err(Error::InvalidLayout(format!("system dimension {dim_system} < 2")));
        }
        if dim_env < 1 {
            return Err(Error::InvalidLayout("environment dimension must be positive".into()));
        }
        Ok(Self { dim_system, dim_env })
    }

    pub fn dim_system(&self) -> usize {
        self.dim_system
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    pub fn dim(&self) -> usize {
        self.dim_system * self.dim_env
    }

    /// `(Tr_E X)_{ij} = Σ_k X_{(i,k),(j,k)}`.
    pub fn partial_trace_env<T: Real>(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.check(x)?;
        let (ds, de) = (self.dim_system, self.dim_env);
        let mut out = CMatrix::zeros(ds, ds);
        for j in 0..ds {
            for i in 0..ds {
                let mut acc = C::new(T::zero(), T::zero());
                for k in 0..de {
                    acc += x[(i * de + k, j * de + k)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    /// `Tr_S X`, the environment marginal.
    pub fn partial_trace_system<T: Real>(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.check(x)?;
        let (ds, de) = (self.dim_system, self.dim_env);
        let mut out = CMatrix::zeros(de, de);
        for l in 0..de {
            for k in 0..de {
                let mut acc = C::new(T::zero(), T::zero());
                for i in 0..ds {
                    acc += x[(i * de + k, i * de + l)];
                }
                out[(k, l)] = acc;
            }
        }
        Ok(out)
    }

    /// `X_S ⊗ I_E`.
    pub fn lift_system<T: Real>(&self, xs: &CMatrix<T>) -> Result<CMatrix<T>> {
        if xs.nrows() != self.dim_system || xs.ncols() != self.dim_system {
            return Err(Error::DimensionMismatch { expected: self.dim_system, found: xs.nrows() });
        }
        Ok(linalg::kron(xs, &linalg::identity(self.dim_env)))
    }

    /// `I_S ⊗ X_E`.
    pub fn lift_env<T: Real>(&self, xe: &CMatrix<T>) -> Result<CMatrix<T>> {
        if xe.nrows() != self.dim_env || xe.ncols() != self.dim_env {
            return Err(Error::DimensionMismatch { expected: self.dim_env, found: xe.nrows() });
        }
        Ok(linalg::kron(&linalg::identity(self.dim_system), xe))
    }

    fn check<T: Real>(&self, x: &CMatrix<T>) -> Result<()> {
        let d = self.dim();
        if x.nrows() != d || x.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.nrows() });
        }
        Ok(())
    }
}

/// Self-adjoint operator. Construction checks hermiticity and stores the
/// exactly symmetrized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Real> {
    entries: CMatrix<T>,
    layout: Option<HilbertLayout>,
}

impl<T: Real> HermitianOperator<T> {
    pub fn new(entries: CMatrix<T>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), found: entries.ncols() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        let scale = T::one().max(linalg::frobenius(&entries));
        let defect = linalg::hermiticity_defect(&entries);
        if defect > T::structural_tol() * scale {
            return Err(Error::NotHermitian(defect.to_f64_lossy()));
        }
        Ok(Self { entries: linalg::hermitian_part(&entries), layout: None })
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[T]) -> Self {
        let d = values.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = cr(v);
        }
        Self { entries: m, layout: None }
    }

    pub fn zeros(d: usize) -> Self {
        Self { entries: CMatrix::zeros(d, d), layout: None }
    }

    pub fn identity(d: usize) -> Self {
        Self { entries: linalg::identity(d), layout: None }
    }

    pub fn with_layout(mut self, layout: HilbertLayout) -> Result<Self> {
        if layout.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: self.dim() });
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn layout(&self) -> Option<HilbertLayout> {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.entries
    }

    /// Real linear combination `a·self + b·other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(Self { entries: &self.entries * cr(a) + &other.entries * cr(b), layout: self.layout })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self { entries: &self.entries * cr(a), layout: self.layout }
    }

    /// Real trace.
    pub fn trace(&self) -> T {
        self.entries.trace().re
    }

    /// Traceless part `X - Tr(X)/d · I` and the removed identity coefficient.
    pub fn traceless(&self) -> (Self, T) {
        let d = T::from_usize(self.dim()).unwrap();
        let shift = self.trace() / d;
        let m = &self.entries - linalg::identity::<T>(self.dim()) * cr(shift);
        (Self { entries: m, layout: self.layout }, shift)
    }

    pub fn eigh(&self) -> linalg::Eigh<T> {
        linalg::eigh(&self.entries)
    }

    /// Real-valued matrix function via the eigendecomposition.
    pub fn apply_fn<F: Fn(T) -> T>(&self, f: F) -> Self {
        Self { entries: self.eigh().map(f), layout: self.layout }
    }
}

/// Positive semidefinite, unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    entries: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates hermiticity, unit trace and eigenvalues `≥ -1e-12` (scaled to
    /// the precision of `T`).
    pub fn new(entries: CMatrix<T>) -> Result<Self> {
        let h = HermitianOperator::new(entries)?;
        let tol = T::structural_tol();
        let tr = h.trace();
        if (tr - T::one()).abs() > tol {
            return Err(Error::InvalidDensity(format!("trace {} != 1", tr.to_f64_lossy())));
        }
        let lmin = h.eigh().min();
        if lmin < -tol {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {}", lmin.to_f64_lossy())));
        }
        Ok(Self { entries: h.into_matrix() })
    }

    /// Normalizes a positive semidefinite Hermitian matrix to unit trace.
    pub fn normalized(entries: CMatrix<T>) -> Result<Self> {
        let tr = entries.trace().re;
        if !(tr > T::zero()) || !tr.is_finite() {
            return Err(Error::InvalidDensity("trace not positive".into()));
        }
        Self::new(entries * cr(T::one() / tr))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let w = T::one() / T::from_usize(d).unwrap();
        Self { entries: linalg::identity::<T>(d) * cr(w) }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &CVector<T>) -> Result<Self> {
        let n = psi.norm();
        if !(n > T::zero()) {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let v = psi * cr(T::one() / n);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.entries
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { entries: linalg::kron(&self.entries, &other.entries) }
    }

    /// Reduced system state `Tr_E ρ`.
    pub fn reduce_system(&self, layout: &HilbertLayout) -> Result<Self> {
        Ok(Self { entries: linalg::hermitian_part(&layout.partial_trace_env(&self.entries)?) })
    }

    /// Reduced environment state `Tr_S ρ`.
    pub fn reduce_env(&self, layout: &HilbertLayout) -> Result<Self> {
        Ok(Self { entries: linalg::hermitian_part(&layout.partial_trace_system(&self.entries)?) })
    }

    /// `Tr(ρ X)`.
    pub fn expectation(&self, x: &CMatrix<T>) -> C<T> {
        (&self.entries * x).trace()
    }

    pub fn eigh(&self) -> linalg::Eigh<T> {
        linalg::eigh(&self.entries)
    }

    pub(crate) fn from_trusted(entries: CMatrix<T>) -> Self {
        Self { entries }
    }
}

/// Linear map on `d × d` operators, stored as a `d² × d²` matrix acting on
/// column-stacked operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator<T: Real> {
    entries: CMatrix<T>,
    dim: usize,
}

impl<T: Real> Superoperator<T> {
    pub fn from_matrix(entries: CMatrix<T>, dim: usize) -> Result<Self> {
        let n = dim * dim;
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: entries.nrows() });
        }
        Ok(Self { entries, dim })
    }

    /// Assemble from the action on matrix units `|i⟩⟨j|`.
    pub fn from_map<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&CMatrix<T>) -> CMatrix<T>,
    {
        let n = dim * dim;
        let mut entries = CMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let col = linalg::vectorize(&f(&linalg::matrix_unit(dim, i, j)));
                entries.set_column(j * dim + i, &col);
            }
        }
        Self { entries, dim }
    }

    /// Fallible variant of [`Superoperator::from_map`].
    pub fn try_from_map<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&CMatrix<T>) -> Result<CMatrix<T>>,
    {
        let n = dim * dim;
        let mut entries = CMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let col = linalg::vectorize(&f(&linalg::matrix_unit(dim, i, j))?);
                entries.set_column(j * dim + i, &col);
            }
        }
        Ok(Self { entries, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: linalg::identity(dim * dim), dim }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: CMatrix::zeros(dim * dim, dim * dim), dim }
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &CMatrix<T>, b: &CMatrix<T>) -> Self {
        Self { entries: linalg::kron(&b.transpose(), a), dim: a.nrows() }
    }

    /// `X ↦ -i[H, X]`.
    pub fn commutator_generator(h: &CMatrix<T>) -> Self {
        let d = h.nrows();
        let id = linalg::identity::<T>(d);
        let comm = linalg::kron(&id, h) - linalg::kron(&h.transpose(), &id);
        Self { entries: comm * (-crate::scalar::ci::<T>()), dim: d }
    }

    /// Operator dimension `d` (the matrix is `d² × d²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn apply(&self, x: &CMatrix<T>) -> CMatrix<T> {
        linalg::unvectorize(&(&self.entries * linalg::vectorize(x)), self.dim)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { entries: &self.entries * &other.entries, dim: self.dim }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { entries: &self.entries + &other.entries, dim: self.dim }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { entries: &self.entries - &other.entries, dim: self.dim }
    }

    pub fn scale(&self, z: C<T>) -> Self {
        Self { entries: &self.entries * z, dim: self.dim }
    }

    /// `exp(z · S)`.
    pub fn exp_scaled(&self, z: C<T>) -> Self {
        Self { entries: linalg::expm(&(&self.entries * z)), dim: self.dim }
    }

    /// Adjoint with respect to the bilinear pairing `Tr(μ S X) = Tr((S^‡ μ) X)`.
    pub fn trace_adjoint(&self) -> Self {
        let d = self.dim;
        let swap = transpose_permutation::<T>(d);
        Self { entries: &swap * self.entries.transpose() * &swap, dim: d }
    }

    /// Frobenius norm of the `d² × d²` matrix.
    pub fn frobenius(&self) -> T {
        self.entries.norm()
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ S(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix<T> {
        let d = self.dim;
        let mut out = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let img = self.apply(&linalg::matrix_unit(d, i, j));
                out.view_mut((i * d, j * d), (d, d)).copy_from(&img);
            }
        }
        out
    }
}

/// Permutation `T` with `T vec(X) = vec(Xᵀ)`.
fn transpose_permutation<T: Real>(d: usize) -> CMatrix<T> {
    let n = d * d;
    let mut p = CMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            // vec index of X_{ij} is j*d + i; of (Xᵀ)_{ij} = X_{ji} is i*d + j
            p[(j * d + i, i * d + j)] = cr(T::one());
        }
    }
    p
}

/// Pauli matrices.
pub mod pauli {
    use super::*;

    pub fn x<T: Real>() -> CMatrix<T> {
        let o = T::one();
        let z = T::zero();
        CMatrix::from_row_slice(2, 2, &[C::new(z, z), C::new(o, z), C::new(o, z), C::new(z, z)])
    }

    pub fn y<T: Real>() -> CMatrix<T> {
        let o = T::one();
        let z = T::zero();
        CMatrix::from_row_slice(2, 2, &[C::new(z, z), C::new(z, -o), C::new(z, o), C::new(z, z)])
    }

    pub fn z<T: Real>() -> CMatrix<T> {
        let o = T::one();
        let z = T::zero();
        CMatrix::from_row_slice(2, 2, &[C::new(o, z), C::new(z, z), C::new(z, z), C::new(-o, z)])
    }
}
