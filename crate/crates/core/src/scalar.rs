//! Scalar abstraction shared by every operator routine.

use nalgebra as na;
use num_complex::Complex;
use num_traits as nt;

/// Real floating point type the operator algebra is generic over (`f32`, `f64`).
pub trait Real:
    Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + na::RealField + Send + Sync
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Loose structural tolerance (hermiticity, trace) scaled to the precision.
    #[inline]
    fn structural_tol() -> Self {
        Self::default_epsilon() * Self::lit(1e4)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`].
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cr<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn ci<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// Logarithmic mean `L(a, b) = (a - b) / (ln a - ln b)` given the logarithms
/// `la = ln a`, `lb = ln b`, with `L(a, a) = a`.
pub fn log_mean_from_logs<T: Real>(la: T, lb: T) -> T {
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    let x = hi - lo;
    if x == T::zero() {
        return lo.exp();
    }
    // exp(lo) * (e^x - 1) / x stays accurate for x -> 0
    lo.exp() * x.exp_m1() / x
}

/// Logarithmic mean of two positive numbers.
pub fn log_mean<T: Real>(a: T, b: T) -> T {
    log_mean_from_logs(a.ln(), b.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_mean_limits() {
        assert_eq!(log_mean(0.3_f64, 0.3), 0.3);
        let near = log_mean(0.3_f64, 0.3 * (1.0 + 1e-12));
        assert!((near - 0.3).abs() < 1e-12);
        let l = log_mean(0.75_f64, 0.25);
        assert!((l - 0.5 / 3.0_f64.ln()).abs() < 1e-15);
        assert_eq!(log_mean(0.75_f64, 0.25), log_mean(0.25, 0.75));
    }

    #[test]
    fn log_mean_f32() {
        let l = log_mean(0.75_f32, 0.25);
        assert!((l - 0.5 / 3.0_f32.ln()).abs() < 1e-6);
    }
}
