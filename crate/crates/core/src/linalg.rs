//! Dense complex linear algebra helpers.
//!
//! Operators are stored as column-major `DMatrix<Complex<T>>`. Vectorization
//! is column stacking throughout: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{cr, Real, C};

/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<C<T>>;
/// Dense complex column vector.
pub type CVector<T> = DVector<C<T>>;

pub fn identity<T: Real>(d: usize) -> CMatrix<T> {
    CMatrix::identity(d, d)
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Frobenius norm.
pub fn frobenius<T: Real>(a: &CMatrix<T>) -> T {
    a.norm()
}

pub fn trace<T: Real>(a: &CMatrix<T>) -> C<T> {
    a.trace()
}

/// Largest entrywise modulus of `A - A†`.
pub fn hermiticity_defect<T: Real>(a: &CMatrix<T>) -> T {
    let mut worst = T::zero();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm_sqr().sqrt();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// `(A + A†) / 2`.
pub fn hermitian_part<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    (a + a.adjoint()) * cr(T::lit(0.5))
}

/// Column-stacking vectorization.
pub fn vectorize<T: Real>(a: &CMatrix<T>) -> CVector<T> {
    CVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`] for a `d × d` operator.
pub fn unvectorize<T: Real>(v: &CVector<T>, d: usize) -> CMatrix<T> {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Matrix unit `|i⟩⟨j|`.
pub fn matrix_unit<T: Real>(d: usize, i: usize, j: usize) -> CMatrix<T> {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = cr(T::one());
    m
}

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    a.exp()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

pub fn eigh<T: Real>(a: &CMatrix<T>) -> Eigh<T> {
    let n = a.nrows();
    let sym = hermitian_part(a);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[x]
            .partial_cmp(&eig.eigenvalues[y])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Eigh { values, vectors }
}

impl<T: Real> Eigh<T> {
    /// `V diag(f(λ)) V†`.
    pub fn map<F: Fn(T) -> T>(&self, f: F) -> CMatrix<T> {
        let weights: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        self.map_values(&weights)
    }

    /// `V diag(w) V†` for explicitly supplied real weights.
    pub fn map_values(&self, w: &[T]) -> CMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, &wj) in w.iter().enumerate() {
            scaled.column_mut(j).scale_mut(wj);
        }
        &scaled * self.vectors.adjoint()
    }

    /// `V diag(z) V†` for complex weights.
    pub fn map_complex(&self, z: &[C<T>]) -> CMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, &zj) in z.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= zj;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Express an operator in the eigenbasis: `V† X V`.
    pub fn to_eigenbasis(&self, x: &CMatrix<T>) -> CMatrix<T> {
        self.vectors.adjoint() * x * &self.vectors
    }

    /// Map back from the eigenbasis: `V X V†`.
    pub fn from_eigenbasis(&self, x: &CMatrix<T>) -> CMatrix<T> {
        &self.vectors * x * self.vectors.adjoint()
    }
}

/// Singular values (descending) of a complex matrix.
pub fn singular_values<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    let mut s: Vec<T> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number<T: Real>(a: &CMatrix<T>) -> T {
    let s = singular_values(a);
    let smin = s[s.len() - 1];
    if smin <= T::zero() {
        return T::max_value().unwrap_or_else(T::one);
    }
    s[0] / smin
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn vectorization_is_column_stacking() {
        let a = CMatrix::<f64>::from_row_slice(
            2,
            2,
            &[
                Complex::new(1.0, 0.0),
                Complex::new(2.0, 0.0),
                Complex::new(3.0, 0.0),
                Complex::new(4.0, 0.0),
            ],
        );
        let v = vectorize(&a);
        let got: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(got, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(unvectorize(&v, 2), a);
    }

    #[test]
    fn vec_of_product_identity() {
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let a = CMatrix::<f64>::from_fn(3, 3, |i, j| Complex::new(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::<f64>::from_fn(3, 3, |i, j| Complex::new((i * j) as f64, 1.0));
        let x = CMatrix::<f64>::from_fn(3, 3, |i, j| Complex::new(1.0 / (1.0 + (i + j) as f64), i as f64));
        let lhs = vectorize(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let m = CMatrix::<f64>::from_row_slice(
            2,
            2,
            &[
                Complex::new(1.0, 0.0),
                Complex::new(0.0, -2.0),
                Complex::new(0.0, 2.0),
                Complex::new(-1.0, 0.0),
            ],
        );
        let e = eigh(&m);
        assert!(e.values[0] < e.values[1]);
        assert!((e.map(|x| x) - &m).norm() < 1e-13);
    }
}
