//! Lossless JSON-friendly matrix record: nested real and imaginary arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{Real, C};

/// Row-major nested arrays of real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixRecord {
    pub fn from_matrix<T: Real>(m: &CMatrix<T>) -> Self {
        let re = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re.to_f64_lossy()).collect())
            .collect();
        let im = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im.to_f64_lossy()).collect())
            .collect();
        Self { rows: m.nrows(), cols: m.ncols(), re, im }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<CMatrix<T>> {
        if self.re.len() != self.rows
            || self.im.len() != self.rows
            || self.re.iter().chain(&self.im).any(|r| r.len() != self.cols)
        {
            return Err(Error::InvalidArgument("matrix record shape mismatch".into()));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| C::new(T::lit(self.re[i][j]), T::lit(self.im[i][j]))))
    }
}
