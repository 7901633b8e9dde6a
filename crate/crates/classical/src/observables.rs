//! Phase functions, Poisson brackets and the Liouvillian action.
//!
//! Sign convention: observables evolve as `dA/dt = {A, H}` with
//! `{f, g} = Σ (∂f/∂q ∂g/∂p - ∂f/∂p ∂g/∂q)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{finite_difference_gradient, ClassicalSystem, FD_STEP};

pub trait Observable: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    /// Phase-space gradient; central differences unless overridden.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        finite_difference_gradient(|y| self.value(y), x, FD_STEP)
    }
}

/// The phase-space coordinate with the given index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coordinate(pub usize);

impl Observable for Coordinate {
    fn value(&self, x: &[f64]) -> f64 {
        x[self.0]
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[self.0] = 1.0;
        g
    }
}

/// `Σ_t c_t Π_i x_i^{e_ti}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        if terms.iter().any(|(c, e)| e.len() != dim || !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("polynomial terms must have {dim} finite exponents")));
        }
        Ok(Self { dim, terms })
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self { dim, terms: vec![(c, vec![0; dim])] }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ea) in &self.terms {
            for (b, eb) in &other.terms {
                terms.push((a * b, ea.iter().zip(eb).map(|(x, y)| x + y).collect()));
            }
        }
        Self { dim: self.dim, terms }
    }
}

impl Observable for Polynomial {
    fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (c, e) in &self.terms {
            for i in 0..self.dim {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for (j, (&k, &v)) in e.iter().zip(x).enumerate() {
                    let k = if j == i { k - 1 } else { k };
                    term *= v.powi(k as i32);
                }
                g[i] += term;
            }
        }
        g
    }
}

/// Observable from a closure, differentiated numerically.
pub struct FnObservable<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Observable for FnObservable<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// `{f, g}` from phase-space gradients.
pub fn bracket_from_gradients(gf: &[f64], gg: &[f64]) -> f64 {
    let n = gf.len() / 2;
    (0..n).map(|i| gf[i] * gg[n + i] - gf[n + i] * gg[i]).sum()
}

pub fn poisson_bracket(f: &dyn Observable, g: &dyn Observable, x: &[f64]) -> Result<f64> {
    let v = bracket_from_gradients(&f.gradient(x), &g.gradient(x));
    if !v.is_finite() {
        return Err(Error::NonFinite("poisson bracket"));
    }
    Ok(v)
}

/// `{A_k, H}` for each observable, i.e. `dA_k/dt` along the flow.
pub fn liouvillian_drift(observables: &[&dyn Observable], system: &dyn ClassicalSystem, x: &[f64]) -> Result<Vec<f64>> {
    let gh = system.gradient(x);
    if gh.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("hamiltonian gradient"));
    }
    observables
        .iter()
        .map(|a| {
            let v = bracket_from_gradients(&a.gradient(x), &gh);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite("liouvillian drift"))
            }
        })
        .collect()
}

/// Indices of the relevant coordinates `Γ_S = (q_S, p_S)` in a phase point.
pub fn system_indices(system: &dyn ClassicalSystem) -> Vec<usize> {
    let (ns, n) = (system.n_system(), system.dof());
    (0..ns).chain(n..n + ns).collect()
}

/// `{Γ_S, H}` at `x`, reading the gradient of `H` directly.
pub fn system_drift(system: &dyn ClassicalSystem, x: &[f64]) -> Vec<f64> {
    let gh = system.gradient(x);
    let (ns, n) = (system.n_system(), system.dof());
    // d q_i/dt = ∂H/∂p_i, d p_i/dt = -∂H/∂q_i
    (0..ns).map(|i| gh[n + i]).chain((0..ns).map(|i| -gh[i])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_gradient_matches_differences() {
        let p = Polynomial::new(3, vec![(1.5, vec![2, 1, 0]), (-0.5, vec![0, 0, 3]), (2.0, vec![0, 0, 0])]).unwrap();
        let x = [0.3, -1.2, 0.8];
        let g = p.gradient(&x);
        let fd = finite_difference_gradient(|y| p.value(y), &x, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(p.degree(), 3);
    }
}
