//! Quadrature rules: fixed Gauss-Legendre and adaptive Gauss-Kronrod (7/15)
//! for matrix-valued integrands.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cr, Real};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `∫_a^b f(x) dx` with a fixed `n`-point Gauss-Legendre rule.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    GaussLegendre::new(n).integrate(f, a, b)
}

/// A precomputed Gauss-Legendre rule on `[0, 1]`, for repeated use.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre_unit(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let h = b - a;
        self.nodes.iter().zip(&self.weights).map(|(&xi, &wi)| wi * f(a + h * xi)).sum::<f64>() * h
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Real, F>(f: &mut F, a: f64, b: f64) -> Result<(CMatrix<T>, f64)>
where
    F: FnMut(f64) -> Result<CMatrix<T>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = &fc * cr(T::lit(WGK[7]));
    let mut gauss = &fc * cr(T::lit(WG[3]));
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        kron += &s * cr(T::lit(WGK[j]));
        if j % 2 == 1 {
            gauss += &s * cr(T::lit(WG[j / 2]));
        }
    }
    kron *= cr(T::lit(h));
    gauss *= cr(T::lit(h));
    let err = (&kron - &gauss).norm().to_f64_lossy();
    Ok((kron, err))
}

/// Adaptive Gauss-Kronrod integration of a matrix-valued function, bisecting
/// until the Frobenius error estimate falls below `abs_tol`.
pub fn integrate_matrix<T: Real, F>(mut f: F, a: f64, b: f64, abs_tol: f64, max_intervals: usize) -> Result<CMatrix<T>>
where
    F: FnMut(f64) -> Result<CMatrix<T>>,
{
    let (first, err) = gk15(&mut f, a, b)?;
    let mut intervals = vec![(a, b, first, err)];
    loop {
        let total_err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if total_err <= abs_tol {
            break;
        }
        if intervals.len() >= max_intervals {
            return Err(Error::QuadratureNonConvergence(total_err));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (left, el) = gk15(&mut f, lo, mid)?;
        let (right, er) = gk15(&mut f, mid, hi)?;
        intervals.push((lo, mid, left, el));
        intervals.push((mid, hi, right, er));
    }
    intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut it = intervals.into_iter();
    let mut total = it.next().unwrap().2;
    for iv in it {
        total += iv.2;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // 5-point rule integrates degree 9 exactly
        let v = gauss_legendre(|x| x.powi(9) - 3.0 * x.powi(4), 0.0, 2.0, 5);
        let exact = 2f64.powi(10) / 10.0 - 3.0 * 2f64.powi(5) / 5.0;
        assert!((v - exact).abs() < 1e-11);
        let (_, w) = gauss_legendre_unit(64);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_matrix_integral() {
        let m = integrate_matrix::<f64, _>(
            |x| Ok(CMatrix::from_element(1, 1, num_complex::Complex::new(x.cos(), x.sin()))),
            0.0,
            3.0,
            1e-13,
            100,
        )
        .unwrap();
        assert!((m[(0, 0)].re - 3f64.sin()).abs() < 1e-13);
        assert!((m[(0, 0)].im - (1.0 - 3f64.cos())).abs() < 1e-13);
    }
}
