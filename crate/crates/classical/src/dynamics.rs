//! Symplectic integration of Hamilton's equations and the exact linear flow
//! of quadratic Hamiltonians.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{ClassicalSystem, CoupledOscillators, SeparableSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    VelocityVerlet,
    /// Fourth-order composition of three velocity-Verlet steps.
    #[default]
    Yoshida4,
}

/// Default time step.
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Trajectory {
    /// `max_t |H(Γ(t)) - H(Γ(0))| / max(|H(Γ(0))|, tiny)`.
    pub fn max_relative_energy_drift(&self, system: &dyn ClassicalSystem) -> f64 {
        let e0 = system.energy(&self.points[0]);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.points.iter().map(|x| (system.energy(x) - e0).abs() / scale).fold(0.0, f64::max)
    }
}

fn verlet_step(sys: &dyn SeparableSystem, x: &mut [f64], force: &mut [f64], dt: f64) {
    let n = force.len();
    let m = sys.masses();
    for i in 0..n {
        x[n + i] += 0.5 * dt * force[i];
    }
    for i in 0..n {
        x[i] += dt * x[n + i] / m[i];
    }
    sys.force(&x[..n], force);
    for i in 0..n {
        x[n + i] += 0.5 * dt * force[i];
    }
}

fn yoshida_weights() -> (f64, f64) {
    let cbrt2 = 2f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    (w1, -cbrt2 * w1)
}

/// Stateful stepper holding the cached force.
pub struct Stepper<'a> {
    sys: &'a dyn SeparableSystem,
    integrator: Integrator,
    force: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(system: &'a dyn ClassicalSystem, integrator: Integrator, x: &[f64]) -> Result<Self> {
        let sys = system.separable().ok_or_else(|| {
            Error::Unsupported("symplectic splitting needs a separable Hamiltonian T(p) + V(q)".into())
        })?;
        let n = system.dof();
        if x.len() != 2 * n {
            return Err(Error::InvalidArgument(format!("phase point has {} entries, expected {}", x.len(), 2 * n)));
        }
        let mut force = vec![0.0; n];
        sys.force(&x[..n], &mut force);
        Ok(Self { sys, integrator, force })
    }

    pub fn step(&mut self, x: &mut [f64], dt: f64) {
        match self.integrator {
            Integrator::VelocityVerlet => verlet_step(self.sys, x, &mut self.force, dt),
            Integrator::Yoshida4 => {
                let (w1, w0) = yoshida_weights();
                verlet_step(self.sys, x, &mut self.force, w1 * dt);
                verlet_step(self.sys, x, &mut self.force, w0 * dt);
                verlet_step(self.sys, x, &mut self.force, w1 * dt);
            }
        }
    }
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument("time step must be positive".into()));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("integration time"));
    }
    Ok((t.abs() / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Integrates from `x0` over `[0, t_final]` with at most `dt` per step,
/// recording every step. Negative `t_final` integrates backwards.
pub fn integrate_trajectory(
    system: &dyn ClassicalSystem,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<Trajectory> {
    let n = step_count(t_final, dt)?;
    let h = if n == 0 { 0.0 } else { t_final / n as f64 };
    let mut stepper = Stepper::new(system, integrator, x0)?;
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut points = vec![x.clone()];
    for k in 1..=n {
        stepper.step(&mut x, h);
        times.push(h * k as f64);
        points.push(x.clone());
    }
    Ok(Trajectory { times, points })
}

/// Final point only.
pub fn evolve(system: &dyn ClassicalSystem, x0: &[f64], t: f64, dt: f64, integrator: Integrator) -> Result<Vec<f64>> {
    let n = step_count(t, dt)?;
    let h = if n == 0 { 0.0 } else { t / n as f64 };
    let mut stepper = Stepper::new(system, integrator, x0)?;
    let mut x = x0.to_vec();
    for _ in 0..n {
        stepper.step(&mut x, h);
    }
    Ok(x)
}

/// Exact flow `Γ(t) = Φ(t) Γ(0)` of a quadratic oscillator network by
/// normal-mode decomposition.
#[derive(Debug, Clone)]
pub struct QuadraticFlow {
    n: usize,
    sqrt_m: Vec<f64>,
    modes: DMatrix<f64>,
    omega: Vec<f64>,
}

impl QuadraticFlow {
    pub fn new(system: &CoupledOscillators) -> Result<Self> {
        if !system.is_quadratic() {
            return Err(Error::Unsupported("normal modes need a quadratic potential".into()));
        }
        let n = system.dof();
        let sqrt_m: Vec<f64> = system.params().masses.iter().map(|m| m.sqrt()).collect();
        let k = system.stiffness();
        let scaled = DMatrix::from_fn(n, n, |i, j| k[(i, j)] / (sqrt_m[i] * sqrt_m[j]));
        let eig = scaled.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&w2| w2 <= 0.0) {
            return Err(Error::Unstable("non-positive normal-mode frequency".into()));
        }
        let omega = eig.eigenvalues.iter().map(|w2| w2.sqrt()).collect();
        Ok(Self { n, sqrt_m, modes: eig.eigenvectors, omega })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    /// The `2n × 2n` propagator `Φ(t)`.
    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        let n = self.n;
        let mut phi = DMatrix::zeros(2 * n, 2 * n);
        for col in 0..2 * n {
            let mut e = vec![0.0; 2 * n];
            e[col] = 1.0;
            let img = self.apply(&e, t);
            phi.set_column(col, &nalgebra::DVector::from_vec(img));
        }
        phi
    }

    pub fn apply(&self, x: &[f64], t: f64) -> Vec<f64> {
        let n = self.n;
        // mass-weighted coordinates y = √m q, π = p/√m, then modes a = Uᵀ y, b = Uᵀ π
        let y = nalgebra::DVector::from_fn(n, |i, _| x[i] * self.sqrt_m[i]);
        let pi = nalgebra::DVector::from_fn(n, |i, _| x[n + i] / self.sqrt_m[i]);
        let a = self.modes.transpose() * y;
        let b = self.modes.transpose() * pi;
        let mut at = a.clone();
        let mut bt = b.clone();
        for k in 0..n {
            let (s, c) = (self.omega[k] * t).sin_cos();
            at[k] = a[k] * c + b[k] / self.omega[k] * s;
            bt[k] = -a[k] * self.omega[k] * s + b[k] * c;
        }
        let y = &self.modes * at;
        let pi = &self.modes * bt;
        (0..n).map(|i| y[i] / self.sqrt_m[i]).chain((0..n).map(|i| pi[i] * self.sqrt_m[i])).collect()
    }
}
