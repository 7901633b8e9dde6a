//! Reference Hamiltonians of mean force: closed form for quadratic networks,
//! quadrature over the environment coordinate for the quartic pair.

use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

use meanforce_core::quadrature::GaussLegendre;

use crate::error::{Error, Result};
use crate::grid::{BinGrid, BinnedField};
use crate::system::{ClassicalSystem, CoupledOscillators};

/// `H*(Γ_S) = Σ p²/2m + ½ q_Sᵀ K_eff q_S` in the `Z*_S = Z/Z_E` gauge, where the
/// additive constant vanishes.
#[derive(Debug, Clone)]
pub struct GaussianHmf {
    pub beta: f64,
    pub masses: Vec<f64>,
    /// Schur complement `K_SS - K_SE K_EE⁻¹ K_ES`.
    pub k_eff: DMatrix<f64>,
    /// `-K_EE⁻¹ K_ES`: conditional mean of `q_E` given `q_S`.
    pub env_response: DMatrix<f64>,
}

pub fn gaussian_hmf_oracle(system: &CoupledOscillators, beta: f64) -> Result<GaussianHmf> {
    if !system.is_quadratic() {
        return Err(Error::Unsupported("closed-form mean force needs a quadratic Hamiltonian".into()));
    }
    let (ns, ne) = (system.n_system(), system.n_env());
    let k = system.stiffness();
    let kss = k.view((0, 0), (ns, ns)).clone_owned();
    let (k_eff, env_response) = if ne == 0 {
        (kss, DMatrix::zeros(0, ns))
    } else {
        let kse = k.view((0, ns), (ns, ne)).clone_owned();
        let kee = k.view((ns, ns), (ne, ne)).clone_owned();
        let chol = kee
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Unstable("environment potential block is not positive definite".into()))?;
        let response = -chol.solve(&kse.transpose());
        (&kss + &kse * &response, response)
    };
    Ok(GaussianHmf { beta, masses: system.params().masses[..ns].to_vec(), k_eff, env_response })
}

impl GaussianHmf {
    pub fn n_system(&self) -> usize {
        self.masses.len()
    }

    pub fn value(&self, gamma_s: &[f64]) -> f64 {
        let ns = self.n_system();
        let q = DVector::from_column_slice(&gamma_s[..ns]);
        let kinetic: f64 = (0..ns).map(|i| gamma_s[ns + i].powi(2) / (2.0 * self.masses[i])).sum();
        kinetic + 0.5 * q.dot(&(&self.k_eff * &q))
    }

    /// `(∂H*/∂q, ∂H*/∂p)`.
    pub fn gradient(&self, gamma_s: &[f64]) -> Vec<f64> {
        let ns = self.n_system();
        let q = DVector::from_column_slice(&gamma_s[..ns]);
        let kq = &self.k_eff * q;
        kq.iter().copied().chain((0..ns).map(|i| gamma_s[ns + i] / self.masses[i])).collect()
    }

    /// `{Γ_S, H*} = (∂_p H*, -∂_q H*)`.
    pub fn drift(&self, gamma_s: &[f64]) -> Vec<f64> {
        symplectic(&self.gradient(gamma_s))
    }

    pub fn conditional_env_mean(&self, q_s: &[f64]) -> Vec<f64> {
        (&self.env_response * DVector::from_column_slice(q_s)).iter().copied().collect()
    }

    /// `F = -(1/β) ln ∫ dΓ_S e^{-βH*} = -(1/β) ln Π_k (2π/(β ω_k))`,
    /// with `ω_k²` the eigenvalues of `M^{-1/2} K_eff M^{-1/2}`.
    pub fn free_energy(&self) -> Result<f64> {
        let ns = self.n_system();
        let scaled =
            DMatrix::from_fn(ns, ns, |i, j| self.k_eff[(i, j)] / (self.masses[i] * self.masses[j]).sqrt());
        let eig = scaled.symmetric_eigen().eigenvalues;
        if eig.iter().any(|&w2| w2 <= 0.0) {
            return Err(Error::Unstable("effective potential is not positive definite".into()));
        }
        let ln_z: f64 = eig.iter().map(|w2| (2.0 * std::f64::consts::PI / (self.beta * w2.sqrt())).ln()).sum();
        Ok(-ln_z / self.beta)
    }
}

pub(crate) fn symplectic(grad: &[f64]) -> Vec<f64> {
    let n = grad.len() / 2;
    (0..n).map(|i| grad[n + i]).chain((0..n).map(|i| -grad[i])).collect()
}

/// Mean force for one system degree of freedom with separable
/// `H*(q, p) = p²/2m + V*(q)`; `V*` is supplied as a closure.
pub struct SeparableHmf {
    pub beta: f64,
    pub mass: f64,
    potential: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SeparableHmf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparableHmf").field("beta", &self.beta).field("mass", &self.mass).finish()
    }
}

/// Nodes per panel when integrating over a bin.
const BIN_NODES: usize = 24;

fn bin_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(BIN_NODES))
}

impl SeparableHmf {
    pub fn new(beta: f64, mass: f64, potential: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { beta, mass, potential: Box::new(potential) }
    }

    pub fn potential(&self, q: f64) -> f64 {
        (self.potential)(q)
    }

    pub fn value(&self, gamma_s: &[f64]) -> f64 {
        gamma_s[1].powi(2) / (2.0 * self.mass) + self.potential(gamma_s[0])
    }

    /// Central difference of `V*` with step `1e-5`.
    pub fn mean_force(&self, q: f64) -> f64 {
        let h = 1e-5 * q.abs().max(1.0);
        -(self.potential(q + h) - self.potential(q - h)) / (2.0 * h)
    }

    pub fn drift(&self, gamma_s: &[f64]) -> Vec<f64> {
        vec![gamma_s[1] / self.mass, self.mean_force(gamma_s[0])]
    }

    /// Exact `ϱ_β`-average of `{Γ_S, H}` over the cell `[q_lo, q_hi] × [p_lo, p_hi]`:
    /// `⟨-V*'⟩ = (e^{-βV*(hi)} - e^{-βV*(lo)}) / (β ∫ e^{-βV*})`, likewise for `p/m`.
    pub fn cell_average_drift(&self, q: (f64, f64), p: (f64, f64)) -> Vec<f64> {
        let b = self.beta;
        let v_ref = self.potential(0.5 * (q.0 + q.1));
        let wq = |x: f64| (-b * (self.potential(x) - v_ref)).exp();
        let zq = bin_rule().integrate(wq, q.0, q.1);
        let force = (wq(q.1) - wq(q.0)) / (b * zq);
        let k = |x: f64| x * x / (2.0 * self.mass);
        let k_ref = k(0.5 * (p.0 + p.1));
        let wp = |x: f64| (-b * (k(x) - k_ref)).exp();
        let zp = bin_rule().integrate(wp, p.0, p.1);
        let velocity = (wp(p.0) - wp(p.1)) / (b * zp);
        vec![velocity, force]
    }

    /// `-(1/β) ln` of the cell probability density, i.e. the value an exact
    /// histogram would report before any gauge shift, relative to `Z*_S`.
    pub fn cell_average_hmf(&self, q: (f64, f64), p: (f64, f64)) -> f64 {
        let b = self.beta;
        let zq = bin_rule().integrate(|x| (-b * self.potential(x)).exp(), q.0, q.1);
        let zp = bin_rule().integrate(|x| (-b * x * x / (2.0 * self.mass)).exp(), p.0, p.1);
        -((zq * zp) / ((q.1 - q.0) * (p.1 - p.0))).ln() / b
    }

    /// `-(1/β) ln ∫ e^{-βH*} dq dp` by quadrature over `[-range, range]` in `q`.
    pub fn free_energy(&self, range: f64) -> f64 {
        let b = self.beta;
        let panels = 64;
        let w = 2.0 * range / panels as f64;
        let zq: f64 = (0..panels)
            .map(|i| {
                let a = -range + i as f64 * w;
                bin_rule().integrate(|x| (-b * self.potential(x)).exp(), a, a + w)
            })
            .sum();
        let zp = (2.0 * std::f64::consts::PI * self.mass / b).sqrt();
        -(zq * zp).ln() / b
    }
}

impl SeparableHmf {
    fn check_grid(grid: &BinGrid) -> Result<()> {
        if grid.dim() != 2 {
            return Err(Error::GridMismatch("separable oracle lives on a (q, p) grid".into()));
        }
        Ok(())
    }

    /// Cell-averaged `{Γ_S, H*}` on every bin, with zero error.
    pub fn drift_field(&self, grid: &BinGrid, counts: Vec<u64>) -> Result<BinnedField> {
        Self::check_grid(grid)?;
        let names = grid.axes().iter().map(|a| a.label.clone()).collect();
        let mut f = BinnedField::empty(grid.clone(), names, counts)?;
        let (qa, pa) = (&grid.axes()[0], &grid.axes()[1]);
        for bin in 0..grid.n_bins() {
            let idx = grid.multi_index(bin);
            let v = self.cell_average_drift(qa.edges(idx[0]), pa.edges(idx[1]));
            for (c, x) in v.into_iter().enumerate() {
                f.set(bin, c, Some(x), Some(0.0));
            }
        }
        Ok(f)
    }

    /// What an exact histogram reports before its min-zero shift:
    /// `-(1/β) ln(P_cell / vol)` with `P_cell` the cell's probability under
    /// `e^{-βH*}/Z*_S`. `range` bounds the `q` integral for `Z*_S`.
    pub fn raw_hmf_field(&self, grid: &BinGrid, counts: Vec<u64>, range: f64) -> Result<BinnedField> {
        Self::check_grid(grid)?;
        let f_s = self.free_energy(range);
        let mut f = BinnedField::empty(grid.clone(), vec!["hmf".into()], counts)?;
        let (qa, pa) = (&grid.axes()[0], &grid.axes()[1]);
        for bin in 0..grid.n_bins() {
            let idx = grid.multi_index(bin);
            let v = self.cell_average_hmf(qa.edges(idx[0]), pa.edges(idx[1])) - f_s;
            f.set(bin, 0, Some(v), Some(0.0));
        }
        Ok(f)
    }
}

/// Configuration of the environment quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Half-width of the `q_E` window in thermal lengths `1/√(β k')`.
    pub half_width: f64,
    pub panels: usize,
    pub nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { half_width: 14.0, panels: 16, nodes: 32 }
    }
}

/// `V*(q_S) = -(1/β) ln [∫ dq_E e^{-βV(q_S, q_E)} / ∫ dq_E e^{-β k_E q_E²/2}]`
/// by composite Gauss-Legendre quadrature in `q_E`. The `p_E` integral cancels
/// against the one in `Z_E`.
pub fn quartic_hmf_quadrature(system: &CoupledOscillators, beta: f64, config: QuadratureConfig) -> Result<SeparableHmf> {
    if system.n_system() != 1 || system.n_env() != 1 {
        return Err(Error::Unsupported("quadrature oracle covers one system and one environment oscillator".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("inverse temperature {beta} must be positive")));
    }
    let p = system.params();
    let (ks, ke) = (p.springs[0], p.springs[1]);
    let (c, lambda) = (system.coupling(0, 0), system.quartic(0, 0));
    let mass = p.masses[0];
    let rule = GaussLegendre::new(config.nodes);
    let integrate = move |v: &dyn Fn(f64) -> f64, centre: f64, stiffness: f64| {
        let half = config.half_width / (beta * stiffness).sqrt();
        let w = 2.0 * half / config.panels as f64;
        (0..config.panels)
            .map(|i| {
                let a = centre - half + i as f64 * w;
                rule.integrate(|x| (-beta * v(x)).exp(), a, a + w)
            })
            .sum::<f64>()
    };
    let z_env = integrate(&|x: f64| 0.5 * ke * x * x, 0.0, ke);
    let potential = move |q: f64| {
        let stiff = ke + 2.0 * lambda * q * q;
        // the integrand peaks near q_E = -c q / k'; the window follows it
        let centre = -c * q / stiff;
        let v = |x: f64| 0.5 * ke * x * x + c * q * x + lambda * q * q * x * x;
        let z = integrate(&v, centre, stiff);
        0.5 * ks * q * q - (z / z_env).ln() / beta
    };
    Ok(SeparableHmf::new(beta, mass, potential))
}

/// Closed form of the quartic pair's `V*`:
/// `k q²/2 - c²q²/(2k') + (1/2β) ln(k'/k_E)`, `k' = k_E + 2λq²`.
pub fn quartic_hmf_closed_form(system: &CoupledOscillators, beta: f64) -> Result<SeparableHmf> {
    if system.n_system() != 1 || system.n_env() != 1 {
        return Err(Error::Unsupported("closed form covers one system and one environment oscillator".into()));
    }
    let p = system.params();
    let (ks, ke, mass) = (p.springs[0], p.springs[1], p.masses[0]);
    let (c, lambda) = (system.coupling(0, 0), system.quartic(0, 0));
    Ok(SeparableHmf::new(beta, mass, move |q: f64| {
        let stiff = ke + 2.0 * lambda * q * q;
        0.5 * ks * q * q - c * c * q * q / (2.0 * stiff) + (stiff / ke).ln() / (2.0 * beta)
    }))
}

/// The Gaussian oracle of a one-dof quadratic system as a [`SeparableHmf`].
pub fn gaussian_as_separable(hmf: &GaussianHmf) -> Result<SeparableHmf> {
    if hmf.n_system() != 1 {
        return Err(Error::Unsupported("separable form covers one system degree of freedom".into()));
    }
    let k = hmf.k_eff[(0, 0)];
    Ok(SeparableHmf::new(hmf.beta, hmf.masses[0], move |q: f64| 0.5 * k * q * q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_closed_form() {
        let sys = CoupledOscillators::quartic_pair(1.0, 1.0, 0.5, 0.1).unwrap();
        let quad = quartic_hmf_quadrature(&sys, 1.0, QuadratureConfig::default()).unwrap();
        let exact = quartic_hmf_closed_form(&sys, 1.0).unwrap();
        for q in [-4.0, -1.3, 0.0, 0.2, 2.5, 5.0] {
            assert!((quad.potential(q) - exact.potential(q)).abs() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn cell_average_of_linear_force_is_centre_value_for_symmetric_cell() {
        let h = SeparableHmf::new(1.0, 1.0, |q| 0.5 * q * q);
        let d = h.cell_average_drift((-0.1, 0.1), (-0.2, 0.2));
        assert!(d[0].abs() < 1e-14 && d[1].abs() < 1e-14);
    }
}
