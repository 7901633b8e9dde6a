//! Reduced dynamical maps, time-local generators and their splitting into a
//! commutator part and a dissipator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner_product::InnerProductSpec;
use crate::linalg::{self, CMatrix, Eigh};
use crate::operator::{DensityMatrix, HermitianOperator, HilbertLayout, Superoperator};
use crate::scalar::{ci, cr, Real, C};

/// Largest composite dimension accepted by [`reduced_map`].
pub const MAX_COMPOSITE_DIM: usize = 64;
/// Smallest singular value of `V(t)` below which the generator is undefined.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;
/// Gram-matrix condition number above which a split is rejected.
pub const SPLIT_MAX_CONDITION: f64 = 1e12;

/// Exact reduced evolution `V(t)[X] = Tr_E(e^{-iHt} (X ⊗ ϱ_E) e^{iHt})` for
/// product initial states.
#[derive(Debug, Clone)]
pub struct ReducedDynamics<T: Real> {
    layout: HilbertLayout,
    hamiltonian: HermitianOperator<T>,
    env_state: DensityMatrix<T>,
    eig: Eigh<T>,
    scale: T,
}

impl<T: Real> ReducedDynamics<T> {
    pub fn new(hamiltonian: &HermitianOperator<T>, env_state: &DensityMatrix<T>, layout: HilbertLayout) -> Result<Self> {
        let d = layout.dim();
        if d > MAX_COMPOSITE_DIM {
            return Err(Error::DimensionBudget(d, MAX_COMPOSITE_DIM));
        }
        if hamiltonian.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: hamiltonian.dim() });
        }
        if env_state.dim() != layout.dim_env() {
            return Err(Error::DimensionMismatch { expected: layout.dim_env(), found: env_state.dim() });
        }
        let eig = hamiltonian.eigh();
        // spectral width sets the natural time scale for finite differences
        let scale = (eig.max() - eig.min()).max(T::one());
        Ok(Self { layout, hamiltonian: hamiltonian.clone(), env_state: env_state.clone(), eig, scale })
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn hamiltonian(&self) -> &HermitianOperator<T> {
        &self.hamiltonian
    }

    pub fn env_state(&self) -> &DensityMatrix<T> {
        &self.env_state
    }

    /// Spectral width of `H` (at least one).
    pub fn frequency_scale(&self) -> T {
        self.scale
    }

    fn unitary(&self, t: T) -> CMatrix<T> {
        let phases: Vec<C<T>> = self.eig.values.iter().map(|&e| C::new((-e * t).cos(), (-e * t).sin())).collect();
        self.eig.map_complex(&phases)
    }

    fn reduce(&self, u: &CMatrix<T>, x: &CMatrix<T>) -> CMatrix<T> {
        let full = linalg::kron(x, self.env_state.matrix());
        self.layout.partial_trace_env(&(u * full * u.adjoint())).expect("layout checked at construction")
    }

    pub fn map_at(&self, t: T) -> Superoperator<T> {
        let u = self.unitary(t);
        Superoperator::from_map(self.layout.dim_system(), |x| self.reduce(&u, x))
    }

    /// `Tr_E` of the exact evolution of `ρ_S ⊗ ϱ_E`.
    pub fn state_at(&self, rho_s: &DensityMatrix<T>, t: T) -> Result<DensityMatrix<T>> {
        if rho_s.dim() != self.layout.dim_system() {
            return Err(Error::DimensionMismatch { expected: self.layout.dim_system(), found: rho_s.dim() });
        }
        Ok(DensityMatrix::from_trusted(self.reduce(&self.unitary(t), rho_s.matrix())))
    }

    /// `-i Tr_E([H, X ⊗ ϱ_E])`, the exact generator at `t = 0`.
    pub fn initial_generator(&self) -> Superoperator<T> {
        let h = self.hamiltonian.matrix();
        Superoperator::from_map(self.layout.dim_system(), |x| {
            let full = linalg::kron(x, self.env_state.matrix());
            self.layout.partial_trace_env(&linalg::commutator(h, &full)).expect("layout checked") * (-ci::<T>())
        })
    }

    /// Central-difference derivative of `V` with step `h`.
    pub fn central_difference(&self, t: T, h: T) -> CMatrix<T> {
        (self.map_at(t + h).matrix() - self.map_at(t - h).matrix()) * cr(T::one() / (h + h))
    }

    /// Generator at an arbitrary time.
    pub fn generator_at(&self, t: T, config: &GeneratorConfig<T>) -> Result<GeneratorSample<T>> {
        let v = self.map_at(t);
        let sigma_min = linalg::singular_values(v.matrix()).into_iter().fold(T::max_value().unwrap(), |a, b| a.min(b));
        let threshold = T::lit(config.singular_threshold);
        let h = config.step.unwrap_or_else(|| T::lit(1e-3) / self.scale);
        let coarse = self.central_difference(t, h);
        let fine = self.central_difference(t, h / T::lit(2.0));
        let halving_change = (&fine - &coarse).norm();
        let vdot = if config.richardson { (&fine * cr(T::lit(4.0)) - &coarse) * cr(T::one() / T::lit(3.0)) } else { fine };
        if !(sigma_min > threshold) {
            return Ok(GeneratorSample { time: t, generator: None, sigma_min, halving_change });
        }
        // K V = V̇  ⇔  Vᵀ Kᵀ = V̇ᵀ
        let k = v
            .matrix()
            .transpose()
            .lu()
            .solve(&vdot.transpose())
            .ok_or(Error::SingularMap { time: t.to_f64_lossy(), sigma_min: sigma_min.to_f64_lossy() })?
            .transpose();
        let generator = Superoperator::from_matrix(k, self.layout.dim_system())?;
        Ok(GeneratorSample { time: t, generator: Some(generator), sigma_min, halving_change })
    }
}

/// Per-time diagnostics of a reduced map.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MapDiagnostics {
    pub time: f64,
    pub sigma_min: f64,
    /// `max_ij |Tr V[|i⟩⟨j|] - δ_ij|`.
    pub trace_defect: f64,
    /// `max_ij ‖V[|j⟩⟨i|] - V[|i⟩⟨j|]†‖`.
    pub hermiticity_defect: f64,
}

#[derive(Debug, Clone)]
pub struct DynamicalMapSeries<T: Real> {
    pub dynamics: ReducedDynamics<T>,
    pub times: Vec<T>,
    pub maps: Vec<Superoperator<T>>,
    pub diagnostics: Vec<MapDiagnostics>,
}

fn diagnose<T: Real>(t: T, v: &Superoperator<T>) -> MapDiagnostics {
    let d = v.dim();
    let mut trace_defect = T::zero();
    let mut herm = T::zero();
    for i in 0..d {
        for j in 0..d {
            let img = v.apply(&linalg::matrix_unit(d, i, j));
            let target = if i == j { cr(T::one()) } else { cr(T::zero()) };
            trace_defect = trace_defect.max((linalg::trace(&img) - target).norm_sqr().sqrt());
            let swapped = v.apply(&linalg::matrix_unit(d, j, i));
            herm = herm.max((swapped - img.adjoint()).norm());
        }
    }
    let sigma_min = linalg::singular_values(v.matrix()).into_iter().fold(T::max_value().unwrap(), |a, b| a.min(b));
    MapDiagnostics {
        time: t.to_f64_lossy(),
        sigma_min: sigma_min.to_f64_lossy(),
        trace_defect: trace_defect.to_f64_lossy(),
        hermiticity_defect: herm.to_f64_lossy(),
    }
}

/// Builds `V(t_k)` on the given strictly increasing grid starting at zero.
pub fn reduced_map<T: Real>(
    hamiltonian: &HermitianOperator<T>,
    env_state: &DensityMatrix<T>,
    layout: HilbertLayout,
    times: &[T],
) -> Result<DynamicalMapSeries<T>> {
    if times.first().map_or(true, |&t| t != T::zero()) {
        return Err(Error::InvalidArgument("time grid must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    let dynamics = ReducedDynamics::new(hamiltonian, env_state, layout)?;
    let maps: Vec<_> = times.iter().map(|&t| dynamics.map_at(t)).collect();
    let diagnostics = times.iter().zip(&maps).map(|(&t, v)| diagnose(t, v)).collect();
    Ok(DynamicalMapSeries { dynamics, times: times.to_vec(), maps, diagnostics })
}

/// `t_k = k · t_max / n`, `k = 0..=n`.
pub fn uniform_grid<T: Real>(t_max: T, n: usize) -> Vec<T> {
    (0..=n).map(|k| t_max * T::lit(k as f64) / T::lit(n as f64)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct GeneratorConfig<T: Real> {
    /// Finite-difference step; defaults to `1e-3` over the spectral width.
    pub step: Option<T>,
    /// Combine steps `h` and `h/2` by Richardson extrapolation.
    pub richardson: bool,
    pub singular_threshold: f64,
}

impl<T: Real> Default for GeneratorConfig<T> {
    fn default() -> Self {
        Self { step: None, richardson: true, singular_threshold: SINGULAR_THRESHOLD }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorSample<T: Real> {
    pub time: T,
    /// `None` where `V(t)` is numerically singular.
    pub generator: Option<Superoperator<T>>,
    pub sigma_min: T,
    /// `‖D(h/2) - D(h)‖_F` of the two central differences.
    pub halving_change: T,
}

#[derive(Debug, Clone)]
pub struct GeneratorSeries<T: Real> {
    pub times: Vec<T>,
    pub samples: Vec<GeneratorSample<T>>,
}

impl<T: Real> GeneratorSeries<T> {
    pub fn gaps(&self) -> Vec<usize> {
        self.samples.iter().enumerate().filter(|(_, s)| s.generator.is_none()).map(|(k, _)| k).collect()
    }
}

/// `K(t_k) = V̇(t_k) V(t_k)⁻¹` on the grid of `series`.
pub fn tcl_generator<T: Real>(series: &DynamicalMapSeries<T>, config: &GeneratorConfig<T>) -> Result<GeneratorSeries<T>> {
    let samples = series.times.iter().map(|&t| series.dynamics.generator_at(t, config)).collect::<Result<Vec<_>>>()?;
    Ok(GeneratorSeries { times: series.times.clone(), samples })
}

/// Traceless Hermitian basis with `Tr(G_a G_b) = δ_ab`.
pub fn gell_mann_basis<T: Real>(d: usize) -> Vec<CMatrix<T>> {
    let mut out = Vec::with_capacity(d * d - 1);
    let r = T::one() / T::lit(2.0).sqrt();
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = cr(r);
            s[(k, j)] = cr(r);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = C::new(T::zero(), -r);
            a[(k, j)] = C::new(T::zero(), r);
            out.push(a);
        }
    }
    for l in 1..d {
        let lf = T::lit(l as f64);
        let norm = T::one() / (lf * (lf + T::one())).sqrt();
        let mut g = CMatrix::zeros(d, d);
        for j in 0..l {
            g[(j, j)] = cr(norm);
        }
        g[(l, l)] = cr(-lf * norm);
        out.push(g);
    }
    out
}

/// Superoperator inner product induced by an operator inner product:
/// `⟨S₁, S₂⟩ = Tr((R S₁ R⁻¹)† R S₂ R⁻¹)` with `W = R† R` the operator Gram matrix.
#[derive(Debug, Clone)]
pub struct SuperoperatorMetric<T: Real> {
    dim: usize,
    r: CMatrix<T>,
    r_inv: CMatrix<T>,
    condition: T,
}

impl<T: Real> SuperoperatorMetric<T> {
    pub fn new(spec: &InnerProductSpec<T>, dim: usize) -> Result<Self> {
        let w = spec.gram(dim)?;
        let w = linalg::hermitian_part(&w);
        let condition = linalg::condition_number(&w);
        if !(condition.to_f64_lossy() <= SPLIT_MAX_CONDITION) {
            return Err(Error::IllConditioned { what: "operator gram matrix", condition: condition.to_f64_lossy() });
        }
        let chol = w.clone().cholesky().ok_or_else(|| {
            Error::NotPositiveDefinite(linalg::eigh(&w).min().to_f64_lossy())
        })?;
        let r = chol.l().adjoint();
        let n = dim * dim;
        let r_inv = r
            .clone()
            .solve_upper_triangular(&linalg::identity(n))
            .ok_or(Error::IllConditioned { what: "metric factor", condition: f64::INFINITY })?;
        Ok(Self { dim, r, r_inv, condition })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram_condition(&self) -> T {
        self.condition
    }

    fn transform(&self, s: &Superoperator<T>) -> CMatrix<T> {
        &self.r * s.matrix() * &self.r_inv
    }

    pub fn inner(&self, a: &Superoperator<T>, b: &Superoperator<T>) -> C<T> {
        (self.transform(a).adjoint() * self.transform(b)).trace()
    }

    pub fn norm(&self, s: &Superoperator<T>) -> T {
        self.transform(s).norm()
    }
}

/// `K = -i[H_eff, ·] + D` with `D` orthogonal to all commutator generators.
#[derive(Debug, Clone)]
pub struct GeneratorSplit<T: Real> {
    pub spec: String,
    pub effective_hamiltonian: HermitianOperator<T>,
    pub dissipator: Superoperator<T>,
    pub dissipator_norm: T,
    pub gram_condition: T,
    /// Condition number of the least-squares normal matrix.
    pub normal_condition: T,
    /// `max_a |Re⟨C_a, D⟩|` over the commutator basis.
    pub orthogonality: T,
    /// `max_a |Im⟨C_a, D⟩|`; nonzero only for non-symmetric weightings.
    pub orthogonality_imag: T,
    /// `‖-i[H_eff, ·] + D - K‖_F`.
    pub reconstruction: T,
}

/// Minimizes `‖K + i[H, ·]‖` over traceless Hermitian `H` under `spec`.
pub fn split_minimal_dissipation<T: Real>(k: &Superoperator<T>, spec: &InnerProductSpec<T>) -> Result<GeneratorSplit<T>> {
    let metric = SuperoperatorMetric::new(spec, k.dim())?;
    split_with_metric(k, &metric, spec.name())
}

/// As [`split_minimal_dissipation`] with a precomputed metric.
pub fn split_with_metric<T: Real>(k: &Superoperator<T>, metric: &SuperoperatorMetric<T>, spec: String) -> Result<GeneratorSplit<T>> {
    let d = k.dim();
    if metric.dim() != d {
        return Err(Error::DimensionMismatch { expected: metric.dim(), found: d });
    }
    let basis = gell_mann_basis::<T>(d);
    let gens: Vec<CMatrix<T>> = basis.iter().map(|g| metric.transform(&Superoperator::commutator_generator(g))).collect();
    let target = metric.transform(k);
    let n = basis.len();
    let normal = nalgebra::DMatrix::<T>::from_fn(n, n, |a, b| (gens[a].adjoint() * &gens[b]).trace().re);
    let rhs = nalgebra::DVector::<T>::from_fn(n, |a, _| (gens[a].adjoint() * &target).trace().re);
    let sv = normal.clone().svd(true, true);
    let smax = sv.singular_values.max();
    let smin = sv.singular_values.min();
    let normal_condition = if smin > T::zero() { smax / smin } else { T::max_value().unwrap() };
    if !(normal_condition.to_f64_lossy() <= SPLIT_MAX_CONDITION) {
        return Err(Error::IllConditioned { what: "commutator normal matrix", condition: normal_condition.to_f64_lossy() });
    }
    let coeffs = sv.solve(&rhs, T::zero()).map_err(|e| Error::InvalidArgument(e.into()))?;
    let mut h = CMatrix::zeros(d, d);
    for (g, &c) in basis.iter().zip(coeffs.iter()) {
        h += g * cr(c);
    }
    let effective_hamiltonian = HermitianOperator::new(h)?;
    let conservative = Superoperator::commutator_generator(effective_hamiltonian.matrix());
    let dissipator = k.sub(&conservative);
    let dt = metric.transform(&dissipator);
    let (mut orth, mut orth_im) = (T::zero(), T::zero());
    for g in &gens {
        let z = (g.adjoint() * &dt).trace();
        orth = orth.max(z.re.abs());
        orth_im = orth_im.max(z.im.abs());
    }
    let reconstruction = (conservative.add(&dissipator).matrix() - k.matrix()).norm();
    Ok(GeneratorSplit {
        spec,
        dissipator_norm: dt.norm(),
        effective_hamiltonian,
        dissipator,
        gram_condition: metric.gram_condition(),
        normal_condition,
        orthogonality: orth,
        orthogonality_imag: orth_im,
        reconstruction,
    })
}

/// `X ↦ L X L† - ½{L†L, X}`.
pub fn lindblad_dissipator<T: Real>(l: &CMatrix<T>) -> Superoperator<T> {
    let d = l.nrows();
    let ldl = l.adjoint() * l;
    let half = cr(T::lit(0.5));
    Superoperator::from_map(d, |x| l * x * l.adjoint() - (&ldl * x + x * &ldl) * half)
}

/// Work-flux series `Ẇ(t_k) = Tr(Ḣ_eff(t_k) ρ_S(t_k))` and its running integral.
#[derive(Debug, Clone, Serialize)]
pub struct WorkFlux {
    pub times: Vec<f64>,
    pub flux: Vec<Option<f64>>,
    /// Trapezoidal running integral; `None` from the first gap on.
    pub work: Vec<Option<f64>>,
}

/// Requires a uniform grid; a missing `H_eff` at a stencil point yields a gap.
pub fn work_flux<T: Real>(times: &[T], h_eff: &[Option<HermitianOperator<T>>], states: &[DensityMatrix<T>]) -> Result<WorkFlux> {
    let n = times.len();
    if h_eff.len() != n || states.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: h_eff.len().min(states.len()) });
    }
    if n < 3 {
        return Err(Error::InvalidArgument("work flux needs at least three grid points".into()));
    }
    let dt = times[1] - times[0];
    let tol = T::lit(1e-9) * (times[n - 1] - times[0]).abs().max(T::one());
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > tol) || !(dt > T::zero()) {
        return Err(Error::InvalidArgument("work flux requires a uniform increasing grid".into()));
    }
    let m = |k: usize| h_eff[k].as_ref().map(|h| h.matrix());
    let half = T::lit(0.5);
    let flux: Vec<Option<f64>> = (0..n)
        .map(|k| {
            let deriv = if k == 0 {
                // second-order one-sided stencils at the ends
                Some((m(0)? * cr(T::lit(-3.0)) + m(1)? * cr(T::lit(4.0)) - m(2)?) * cr(half / dt))
            } else if k == n - 1 {
                Some((m(k)? * cr(T::lit(3.0)) - m(k - 1)? * cr(T::lit(4.0)) + m(k - 2)?) * cr(half / dt))
            } else {
                Some((m(k + 1)? - m(k - 1)?) * cr(half / dt))
            }?;
            Some((deriv * states[k].matrix()).trace().re.to_f64_lossy())
        })
        .collect();
    let dtf = dt.to_f64_lossy();
    let mut work = Vec::with_capacity(n);
    let mut acc = Some(0.0);
    for k in 0..n {
        if k > 0 {
            acc = match (acc, flux[k - 1], flux[k]) {
                (Some(a), Some(f0), Some(f1)) => Some(a + 0.5 * dtf * (f0 + f1)),
                _ => None,
            };
        } else if flux[0].is_none() {
            acc = None;
        }
        work.push(acc);
    }
    Ok(WorkFlux { times: times.iter().map(|t| t.to_f64_lossy()).collect(), flux, work })
}

#[derive(Debug, Clone, Serialize)]
pub struct HeffComparison {
    pub spec: String,
    pub times: Vec<f64>,
    /// `‖H_eff(t) - H*_S‖_F`, both traceless.
    pub distance: Vec<Option<f64>>,
    /// `‖ρ_S(t_N) - Tr_E ϱ_β‖_F`.
    pub equilibration_distance: f64,
    pub equilibrated: bool,
    pub caveat: Option<String>,
}

pub fn compare_heff_hmf<T: Real>(
    spec: &str,
    times: &[T],
    h_eff: &[Option<HermitianOperator<T>>],
    hmf: &HermitianOperator<T>,
    final_state: &DensityMatrix<T>,
    reduced_equilibrium: &DensityMatrix<T>,
    equilibration_tol: f64,
) -> Result<HeffComparison> {
    if h_eff.len() != times.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: h_eff.len() });
    }
    let (target, _) = hmf.traceless();
    let distance = h_eff
        .iter()
        .map(|h| {
            h.as_ref().map(|h| {
                let (h0, _) = h.traceless();
                (h0.matrix() - target.matrix()).norm().to_f64_lossy()
            })
        })
        .collect();
    let equilibration_distance = (final_state.matrix() - reduced_equilibrium.matrix()).norm().to_f64_lossy();
    let equilibrated = equilibration_distance <= equilibration_tol;
    let caveat = (!equilibrated).then(|| {
        format!("reduced state is {equilibration_distance:.3e} from the reduced equilibrium state at the final time")
    });
    Ok(HeffComparison {
        spec: spec.to_string(),
        times: times.iter().map(|t| t.to_f64_lossy()).collect(),
        distance,
        equilibration_distance,
        equilibrated,
        caveat,
    })
}

/// Fourth-order Runge-Kutta propagation of `ρ_S` with generators evaluated at
/// the stage times.
pub fn propagate_with_generator<T, F>(rho0: &CMatrix<T>, times: &[T], substeps: usize, mut generator: F) -> Result<Vec<CMatrix<T>>>
where
    T: Real,
    F: FnMut(T) -> Result<Superoperator<T>>,
{
    let mut out = Vec::with_capacity(times.len());
    let mut rho = rho0.clone();
    out.push(rho.clone());
    let two = T::lit(2.0);
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / T::lit(substeps.max(1) as f64);
        for s in 0..substeps.max(1) {
            let t = w[0] + h * T::lit(s as f64);
            let k0 = generator(t)?;
            let km = generator(t + h / two)?;
            let k1 = generator(t + h)?;
            let a = k0.apply(&rho);
            let b = km.apply(&(&rho + &a * cr(h / two)));
            let c = km.apply(&(&rho + &b * cr(h / two)));
            let dd = k1.apply(&(&rho + &c * cr(h)));
            rho += (a + (b + c) * cr(two) + dd) * cr(h / T::lit(6.0));
        }
        out.push(rho.clone());
    }
    Ok(out)
}
