//! Phase-space Hamiltonians.
//!
//! A phase point is `[q_0, ..., q_{n-1}, p_0, ..., p_{n-1}]` with the system
//! degrees of freedom first (`0..n_system`) and the environment after them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classical Hamiltonian on `2n`-dimensional phase space.
pub trait ClassicalSystem: Send + Sync {
    fn n_system(&self) -> usize;
    fn n_env(&self) -> usize;
    fn energy(&self, x: &[f64]) -> f64;
    /// `∇_Γ H` in the phase-point layout.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `H = Σ p²/2m + V(q)` structure, if present.
    fn separable(&self) -> Option<&dyn SeparableSystem> {
        None
    }

    fn dof(&self) -> usize {
        self.n_system() + self.n_env()
    }

    fn phase_dim(&self) -> usize {
        2 * self.dof()
    }
}

pub trait SeparableSystem: Send + Sync {
    fn masses(&self) -> &[f64];
    fn potential(&self, q: &[f64]) -> f64;
    /// Writes `-∂V/∂q` into `out`.
    fn force(&self, q: &[f64], out: &mut [f64]);
}

/// Largest relative deviation between the analytic gradient and central
/// differences with step `h·max(1, |x_i|)`.
pub fn gradient_self_test(system: &dyn ClassicalSystem, x: &[f64], h: f64) -> f64 {
    let g = system.gradient(x);
    let fd = finite_difference_gradient(|y| system.energy(y), x, h);
    let scale = g.iter().chain(&fd).fold(1.0f64, |a, v| a.max(v.abs()));
    g.iter().zip(&fd).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max)
}

pub(crate) fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            y[i] = x[i] + step;
            let up = f(&y);
            y[i] = x[i] - step;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Parameters of the built-in oscillator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// One mass per degree of freedom (system first).
    pub masses: Vec<f64>,
    /// One spring constant per degree of freedom.
    pub springs: Vec<f64>,
    /// Bilinear couplings `c_ij q_i q_j`, system `i`, environment `j` (row-major, `n_system × n_env`).
    pub couplings: Vec<f64>,
    /// Quartic couplings `λ_ij q_i² q_j²`, same shape as `couplings`.
    pub quartic: Vec<f64>,
}

/// `H = Σ p²/2m + Σ k q²/2 + Σ c_ij q_i q_j + Σ λ_ij q_i² q_j²`.
#[derive(Debug, Clone)]
pub struct CoupledOscillators {
    n_system: usize,
    n_env: usize,
    params: OscillatorParams,
}

impl CoupledOscillators {
    pub fn new(n_system: usize, n_env: usize, params: OscillatorParams) -> Result<Self> {
        let n = n_system + n_env;
        if n_system == 0 {
            return Err(Error::InvalidArgument("need at least one system degree of freedom".into()));
        }
        if params.masses.len() != n || params.springs.len() != n {
            return Err(Error::InvalidArgument(format!("expected {n} masses and springs")));
        }
        if params.couplings.len() != n_system * n_env || params.quartic.len() != n_system * n_env {
            return Err(Error::InvalidArgument(format!("expected {} couplings", n_system * n_env)));
        }
        let all = params.masses.iter().chain(&params.springs).chain(&params.couplings).chain(&params.quartic);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("oscillator parameters"));
        }
        if params.masses.iter().any(|&m| m <= 0.0) {
            return Err(Error::InvalidArgument("masses must be positive".into()));
        }
        if params.quartic.iter().any(|&l| l < 0.0) {
            return Err(Error::Unstable("negative quartic coupling".into()));
        }
        let sys = Self { n_system, n_env, params };
        if sys.stiffness().cholesky().is_none() {
            return Err(Error::Unstable("quadratic potential is not positive definite".into()));
        }
        Ok(sys)
    }

    /// One system and one environment oscillator with equal `m`, `k`.
    pub fn harmonic_pair(m: f64, k: f64, c: f64) -> Result<Self> {
        Self::quartic_pair(m, k, c, 0.0)
    }

    /// As [`Self::harmonic_pair`] plus `λ q_S² q_E²`.
    pub fn quartic_pair(m: f64, k: f64, c: f64, lambda: f64) -> Result<Self> {
        Self::new(
            1,
            1,
            OscillatorParams { masses: vec![m; 2], springs: vec![k; 2], couplings: vec![c], quartic: vec![lambda] },
        )
    }

    /// One system oscillator coupled with strength `c` to each of `n_env` identical oscillators.
    pub fn harmonic_star(m: f64, k: f64, c: f64, n_env: usize) -> Result<Self> {
        Self::new(
            1,
            n_env,
            OscillatorParams {
                masses: vec![m; n_env + 1],
                springs: vec![k; n_env + 1],
                couplings: vec![c; n_env],
                quartic: vec![0.0; n_env],
            },
        )
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.params.couplings[i * self.n_env + j]
    }

    pub fn quartic(&self, i: usize, j: usize) -> f64 {
        self.params.quartic[i * self.n_env + j]
    }

    pub fn is_quadratic(&self) -> bool {
        self.params.quartic.iter().all(|&l| l == 0.0)
    }

    /// Matrix `K` of the quadratic part `½ qᵀ K q`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let mut k = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.params.springs));
        for i in 0..self.n_system {
            for j in 0..self.n_env {
                let c = self.coupling(i, j);
                k[(i, self.n_system + j)] = c;
                k[(self.n_system + j, i)] = c;
            }
        }
        k
    }
}

impl ClassicalSystem for CoupledOscillators {
    fn n_system(&self) -> usize {
        self.n_system
    }

    fn n_env(&self) -> usize {
        self.n_env
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let n = self.dof();
        let kinetic: f64 = (0..n).map(|i| x[n + i] * x[n + i] / (2.0 * self.params.masses[i])).sum();
        kinetic + self.potential(&x[..n])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dof();
        let mut g = vec![0.0; 2 * n];
        let mut f = vec![0.0; n];
        self.force(&x[..n], &mut f);
        for i in 0..n {
            g[i] = -f[i];
            g[n + i] = x[n + i] / self.params.masses[i];
        }
        g
    }

    fn separable(&self) -> Option<&dyn SeparableSystem> {
        Some(self)
    }
}

impl SeparableSystem for CoupledOscillators {
    fn masses(&self) -> &[f64] {
        &self.params.masses
    }

    fn potential(&self, q: &[f64]) -> f64 {
        let ns = self.n_system;
        let mut v: f64 = q.iter().zip(&self.params.springs).map(|(x, k)| 0.5 * k * x * x).sum();
        for i in 0..ns {
            for j in 0..self.n_env {
                let (qs, qe) = (q[i], q[ns + j]);
                v += self.coupling(i, j) * qs * qe + self.quartic(i, j) * qs * qs * qe * qe;
            }
        }
        v
    }

    fn force(&self, q: &[f64], out: &mut [f64]) {
        let ns = self.n_system;
        for (o, (x, k)) in out.iter_mut().zip(q.iter().zip(&self.params.springs)) {
            *o = -k * x;
        }
        for i in 0..ns {
            for j in 0..self.n_env {
                let (qs, qe) = (q[i], q[ns + j]);
                let (c, l) = (self.coupling(i, j), self.quartic(i, j));
                out[i] -= c * qe + 2.0 * l * qs * qe * qe;
                out[ns + j] -= c * qs + 2.0 * l * qs * qs * qe;
            }
        }
    }
}

/// Hamiltonian given by a closure; the gradient uses central differences
/// with step `1e-5·max(1, |x_i|)`.
pub struct FunctionSystem<F> {
    n_system: usize,
    n_env: usize,
    energy: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FunctionSystem<F> {
    pub fn new(n_system: usize, n_env: usize, energy: F) -> Self {
        Self { n_system, n_env, energy }
    }
}

/// Relative step of [`FunctionSystem`] gradients.
pub const FD_STEP: f64 = 1e-5;

impl<F: Fn(&[f64]) -> f64 + Send + Sync> ClassicalSystem for FunctionSystem<F> {
    fn n_system(&self) -> usize {
        self.n_system
    }

    fn n_env(&self) -> usize {
        self.n_env
    }

    fn energy(&self, x: &[f64]) -> f64 {
        (self.energy)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        finite_difference_gradient(|y| (self.energy)(y), x, FD_STEP)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradient_matches_differences() {
        let sys = CoupledOscillators::quartic_pair(1.3, 0.9, 0.4, 0.2).unwrap();
        let x = [0.7, -1.1, 0.3, 2.0];
        assert!(gradient_self_test(&sys, &x, 1e-5) < 1e-6);
        let star = CoupledOscillators::harmonic_star(1.0, 1.0, 0.3, 3).unwrap();
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        assert!(gradient_self_test(&star, &x, 1e-5) < 1e-6);
    }

    #[test]
    fn unstable_systems_rejected() {
        assert!(matches!(CoupledOscillators::harmonic_pair(1.0, 1.0, 1.5), Err(Error::Unstable(_))));
        assert!(CoupledOscillators::quartic_pair(1.0, 1.0, 0.1, -0.1).is_err());
        assert!(CoupledOscillators::harmonic_pair(-1.0, 1.0, 0.1).is_err());
    }
}
