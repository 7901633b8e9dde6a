//! Histogram estimates of the Hamiltonian of mean force `H*(α)`, its gradient
//! and the macroscopic density `p(α, t)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{Integrator, Stepper};
use crate::error::{Error, Result};
use crate::grid::{BinGrid, BinnedField};
use crate::oracle::symplectic;
use crate::relevant::{accumulate_by_chain, count_inefficiency, RelevantSet};
use crate::sampling::SampleSet;
use crate::system::ClassicalSystem;

/// Samples that must fall inside the grid.
pub const MIN_COVERAGE: f64 = 0.99;
/// Tolerated fraction of empty bins among enclosed bins.
pub const MAX_EMPTY_INTERIOR: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct HmfEstimate {
    /// `H*(α) - min H*`; empty bins are `None`.
    pub field: BinnedField,
    /// Minimum of the raw estimate `-(1/β) ln(count / (N·vol))`, so that
    /// `raw = field + offset`.
    pub offset: f64,
    pub beta: f64,
    pub n_samples: usize,
    pub inside_fraction: f64,
    pub interior_bins: usize,
    pub empty_interior_bins: usize,
    /// Multiplier `√g` applied to every binomial error, `g` pooled from the
    /// between-chain scatter of bin counts.
    pub error_inflation: f64,
}

impl HmfEstimate {
    /// `raw` value of a bin, undoing the min-zero shift.
    pub fn raw(&self, bin: usize) -> Option<f64> {
        self.field.value(bin, 0).map(|v| v + self.offset)
    }

    /// The estimate without the min-zero shift.
    pub fn raw_field(&self) -> BinnedField {
        let mut f = self.field.clone();
        for bin in 0..f.n_bins() {
            if let Some(v) = self.field.value(bin, 0) {
                f.set(bin, 0, Some(v + self.offset), self.field.error(bin, 0));
            }
        }
        f
    }
}

fn coverage_check(inside: u64, total: usize) -> Result<f64> {
    let frac = inside as f64 / total as f64;
    if frac < MIN_COVERAGE {
        return Err(Error::Coverage { inside_fraction: frac });
    }
    Ok(frac)
}

fn resolution_check(grid: &BinGrid, counts: &[u64]) -> Result<(usize, usize)> {
    let populated: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let enclosed = grid.enclosed(&populated);
    let interior = enclosed.iter().filter(|&&e| e).count();
    let empty = enclosed.iter().zip(&populated).filter(|(&e, &p)| e && !p).count();
    if interior > 0 && empty as f64 > MAX_EMPTY_INTERIOR * interior as f64 {
        return Err(Error::Resolution { empty, interior });
    }
    Ok((interior, empty))
}

/// `H*(α) = -(1/β) ln(count_α / (N·vol))`, shifted so the minimum is zero.
/// Errors are binomial, `√((1 - p_α)/count_α)/β`, inflated by `√g`.
pub fn estimate_hmf(samples: &SampleSet, grid: &BinGrid, relevant: &RelevantSet) -> Result<HmfEstimate> {
    check_dims(grid, relevant)?;
    let n = samples.len();
    let (stats, chains) = accumulate_by_chain(grid, relevant, samples, 0, |_, _| {});
    let inside = n as u64 - stats.outside;
    let inside_fraction = coverage_check(inside, n)?;
    let (interior_bins, empty_interior_bins) = resolution_check(grid, &stats.n)?;
    let beta = samples.beta;
    let vol = grid.volume();
    let chain_counts: Vec<Vec<u64>> = chains.into_iter().map(|c| c.n).collect();
    let sizes: Vec<usize> = samples.chain_ranges().iter().map(|(a, b)| b - a).collect();
    let inflation = count_inefficiency(&chain_counts, &sizes).sqrt();
    let mut field = BinnedField::empty(grid.clone(), vec!["hmf".into()], stats.n.clone())?;
    let mut offset = f64::INFINITY;
    for bin in 0..grid.n_bins() {
        let c = stats.n[bin];
        if c == 0 {
            continue;
        }
        let p = c as f64 / n as f64;
        let raw = -(p / vol).ln() / beta;
        let se = ((1.0 - p) / c as f64).sqrt() / beta * inflation;
        offset = offset.min(raw);
        field.set(bin, 0, Some(raw), Some(se));
    }
    for bin in 0..grid.n_bins() {
        if let (Some(v), e) = (field.value(bin, 0), field.error(bin, 0)) {
            field.set(bin, 0, Some(v - offset), e);
        }
    }
    Ok(HmfEstimate {
        field,
        offset,
        beta,
        n_samples: n,
        inside_fraction,
        interior_bins,
        empty_interior_bins,
        error_inflation: inflation,
    })
}

fn check_dims(grid: &BinGrid, relevant: &RelevantSet) -> Result<()> {
    if grid.dim() != relevant.len() {
        return Err(Error::GridMismatch(format!(
            "{}-dimensional grid for {} relevant observables",
            grid.dim(),
            relevant.len()
        )));
    }
    Ok(())
}

/// Vector field plus the number of populated bins left undefined.
#[derive(Debug, Clone, Serialize)]
pub struct GradientField {
    pub field: BinnedField,
    /// Populated bins without a populated neighbour along some axis.
    pub isolated_bins: usize,
}

/// `∇_α` of component `c` by central differences, one-sided where only one
/// neighbour is populated. Errors of neighbouring bins are treated as independent.
pub fn gradient(field: &BinnedField, c: usize) -> GradientField {
    let grid = &field.grid;
    let d = grid.dim();
    let names = grid.axes().iter().map(|a| format!("d/d{}", a.label)).collect();
    let mut out = BinnedField::empty(grid.clone(), names, field.counts.clone()).expect("same grid");
    let mut isolated = 0;
    for bin in 0..grid.n_bins() {
        let (Some(v), Some(e)) = (field.value(bin, c), field.error(bin, c)) else { continue };
        let mut comps = Vec::with_capacity(d);
        for (axis, a) in grid.axes().iter().enumerate() {
            let w = a.width();
            let at = |b: Option<usize>| b.and_then(|b| Some((field.value(b, c)?, field.error(b, c)?)));
            let up = at(grid.neighbour(bin, axis, true));
            let down = at(grid.neighbour(bin, axis, false));
            let g = match (down, up) {
                (Some((vd, ed)), Some((vu, eu))) => Some(((vu - vd) / (2.0 * w), (eu * eu + ed * ed).sqrt() / (2.0 * w))),
                (None, Some((vu, eu))) => Some(((vu - v) / w, (eu * eu + e * e).sqrt() / w)),
                (Some((vd, ed)), None) => Some(((v - vd) / w, (ed * ed + e * e).sqrt() / w)),
                (None, None) => None,
            };
            comps.push(g);
        }
        if comps.iter().any(Option::is_none) {
            isolated += 1;
            continue;
        }
        for (axis, g) in comps.into_iter().enumerate() {
            let (g, e) = g.expect("checked");
            out.set(bin, axis, Some(g), Some(e));
        }
    }
    GradientField { field: out, isolated_bins: isolated }
}

/// `∇_α H*` of an estimate.
pub fn mean_force(hmf: &BinnedField) -> GradientField {
    gradient(hmf, 0)
}

/// `{A, H*} = 𝕁 ∇_α H*`: for `α = (q, p)` this is `(∂_p H*, -∂_q H*)`.
pub fn drift_from_hmf(hmf: &BinnedField) -> Result<GradientField> {
    let d = hmf.grid.dim();
    if d % 2 != 0 {
        return Err(Error::GridMismatch("symplectic drift needs (q, p) pairs of axes".into()));
    }
    let grad = mean_force(hmf);
    let names = hmf.grid.axes().iter().map(|a| a.label.clone()).collect();
    let mut out = BinnedField::empty(hmf.grid.clone(), names, hmf.counts.clone())?;
    for bin in 0..hmf.n_bins() {
        if let (Some(g), Some(e)) = (grad.field.vector(bin), grad.field.vector_error(bin)) {
            let v = symplectic(&g);
            let h = d / 2;
            for c in 0..d {
                let err = if c < h { e[h + c] } else { e[c - h] };
                out.set(bin, c, Some(v[c]), Some(err));
            }
        }
    }
    Ok(GradientField { field: out, isolated_bins: grad.isolated_bins })
}

/// Weighted least-squares fit `H*(α) ≈ a + bᵀα + ½ αᵀ C α` over bins with at
/// least `min_count` samples.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticFit {
    pub intercept: f64,
    pub intercept_error: f64,
    pub linear: Vec<f64>,
    /// Symmetric Hessian `C`, row-major.
    pub hessian: Vec<Vec<f64>>,
    pub hessian_errors: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub bins_used: usize,
}

impl QuadraticFit {
    /// `C_qq` of the first axis, the effective spring constant for `α = (q, p)`.
    pub fn spring_constant(&self) -> (f64, f64) {
        (self.hessian[0][0], self.hessian_errors[0][0])
    }
}

pub fn fit_quadratic(field: &BinnedField, c: usize, min_count: u64) -> Result<QuadraticFit> {
    let grid = &field.grid;
    let d = grid.dim();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let n_par = 1 + d + pairs.len();
    let rows: Vec<(Vec<f64>, f64, f64)> = (0..grid.n_bins())
        .filter(|&b| field.counts[b] >= min_count)
        .filter_map(|b| {
            let (v, e) = (field.value(b, c)?, field.error(b, c)?);
            (e > 0.0).then(|| {
                let x = grid.centre(b);
                let mut basis = vec![1.0];
                basis.extend_from_slice(&x);
                // ½ C_ii x_i², C_ij x_i x_j
                basis.extend(pairs.iter().map(|&(i, j)| if i == j { 0.5 * x[i] * x[i] } else { x[i] * x[j] }));
                (basis, v, e)
            })
        })
        .collect();
    if rows.len() <= n_par {
        return Err(Error::InvalidArgument(format!("{} usable bins for a {n_par}-parameter fit", rows.len())));
    }
    let mut normal = DMatrix::<f64>::zeros(n_par, n_par);
    let mut rhs = DVector::<f64>::zeros(n_par);
    for (basis, v, e) in &rows {
        let w = 1.0 / (e * e);
        for i in 0..n_par {
            rhs[i] += w * basis[i] * v;
            for j in 0..n_par {
                normal[(i, j)] += w * basis[i] * basis[j];
            }
        }
    }
    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("quadratic fit normal equations are singular".into()))?;
    let coef = chol.solve(&rhs);
    let cov = chol.inverse();
    let chi2 = rows
        .iter()
        .map(|(basis, v, e)| {
            let fit: f64 = basis.iter().zip(coef.iter()).map(|(b, c)| b * c).sum();
            ((v - fit) / e).powi(2)
        })
        .sum();
    let mut hessian = vec![vec![0.0; d]; d];
    let mut hessian_errors = vec![vec![0.0; d]; d];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let idx = 1 + d + k;
        hessian[i][j] = coef[idx];
        hessian[j][i] = coef[idx];
        hessian_errors[i][j] = cov[(idx, idx)].sqrt();
        hessian_errors[j][i] = cov[(idx, idx)].sqrt();
    }
    Ok(QuadraticFit {
        intercept: coef[0],
        intercept_error: cov[(0, 0)].sqrt(),
        linear: coef.iter().skip(1).take(d).copied().collect(),
        hessian,
        hessian_errors,
        chi2,
        dof: rows.len() - n_par,
        bins_used: rows.len(),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FreeEnergy {
    pub value: f64,
    /// Empty bins inside the populated region, whose volume is left out.
    pub excluded_bins: usize,
}

/// `F = -(1/β) ln Σ_α e^{-β(H*_α + shift)} vol` over defined bins.
pub fn free_energy(field: &BinnedField, c: usize, beta: f64, shift: f64) -> Result<FreeEnergy> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("inverse temperature {beta} must be positive")));
    }
    let vals: Vec<f64> = (0..field.n_bins()).filter_map(|b| field.value(b, c)).map(|v| v + shift).collect();
    if vals.is_empty() {
        return Err(Error::InvalidArgument("field has no defined bins".into()));
    }
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = vals.iter().map(|v| (-beta * (v - min)).exp()).sum::<f64>() * field.grid.volume();
    let populated: Vec<bool> = (0..field.n_bins()).map(|b| field.value(b, c).is_some()).collect();
    let excluded_bins =
        field.grid.enclosed(&populated).iter().zip(&populated).filter(|(&e, &p)| e && !p).count();
    Ok(FreeEnergy { value: min - z.ln() / beta, excluded_bins })
}

/// Free energy of an estimate whose additive constant is pinned by
/// `H*(0) = 0`, using the intercept of a quadratic fit. This is the
/// `Z*_S = Z/Z_E` gauge whenever the interaction vanishes at `Γ_S = 0`
/// and `H_S(0) = 0`, as for the oscillator family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PinnedFreeEnergy {
    pub value: f64,
    /// Error of the fitted intercept, which dominates.
    pub error: f64,
    pub excluded_bins: usize,
}

///
/// The histogram reports `-(1/β) ln` of cell-averaged densities, which sits
/// above the point value at the minimum by `Σ_i ∂_i²H* w_i²/24` to leading
/// order in the bin widths; the intercept is corrected by that amount.
pub fn free_energy_pinned(hmf: &HmfEstimate, fit: &QuadraticFit) -> Result<PinnedFreeEnergy> {
    let cell: f64 = hmf.field.grid.axes().iter().enumerate().map(|(i, a)| fit.hessian[i][i] * a.width().powi(2) / 24.0).sum();
    let f = free_energy(&hmf.field, 0, hmf.beta, -(fit.intercept - cell))?;
    Ok(PinnedFreeEnergy { value: f.value, error: fit.intercept_error, excluded_bins: f.excluded_bins })
}

/// `p(α, t_k)` for an ensemble carried along the flow.
#[derive(Debug, Clone, Serialize)]
pub struct DensitySeries {
    pub times: Vec<f64>,
    pub fields: Vec<BinnedField>,
    pub escape_fraction: Vec<f64>,
    /// Bin of each trajectory at each time.
    #[serde(skip)]
    pub assignments: Vec<Vec<Option<u32>>>,
    pub n_samples: usize,
    /// `√g`, with `g` the largest pooled count inefficiency over the times.
    pub error_inflation: f64,
}

/// Propagates every member of `initial` to each of `times` (non-decreasing,
/// from 0) and histograms `A(Γ(t))`. Each `p` is normalized over the points
/// inside the grid, so `Σ p·vol = 1`; errors are binomial times `√g`.
pub fn estimate_p_alpha_t(
    initial: &SampleSet,
    system: &dyn ClassicalSystem,
    grid: &BinGrid,
    relevant: &RelevantSet,
    times: &[f64],
    dt: f64,
    integrator: Integrator,
) -> Result<DensitySeries> {
    check_dims(grid, relevant)?;
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be non-negative and non-decreasing".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("time step must be positive".into()));
    }
    if initial.phase_dim() != system.phase_dim() {
        return Err(Error::InvalidArgument("ensemble and system dimensions differ".into()));
    }
    // fail early on non-separable systems
    Stepper::new(system, integrator, initial.point(0))?;
    let n = initial.len();
    let per_sample: Vec<Vec<Option<u32>>> = initial
        .raw()
        .par_chunks(initial.phase_dim())
        .map(|x0| {
            let mut stepper = Stepper::new(system, integrator, x0).expect("checked separable");
            let mut x = x0.to_vec();
            let mut t = 0.0;
            times
                .iter()
                .map(|&tk| {
                    let span = tk - t;
                    if span > 0.0 {
                        let steps = (span / dt).ceil().max(1.0) as usize;
                        let h = span / steps as f64;
                        for _ in 0..steps {
                            stepper.step(&mut x, h);
                        }
                    }
                    t = tk;
                    relevant.bin(grid, &x).map(|b| b as u32)
                })
                .collect()
        })
        .collect();
    let assignments: Vec<Vec<Option<u32>>> =
        (0..times.len()).map(|k| per_sample.iter().map(|s| s[k]).collect()).collect();
    let ranges = initial.chain_ranges();
    let inflation = assignments
        .iter()
        .map(|a| assignment_inefficiency(grid, a, &ranges))
        .fold(1.0, f64::max)
        .sqrt();
    let mut fields = Vec::with_capacity(times.len());
    let mut escape = Vec::with_capacity(times.len());
    for a in &assignments {
        let (field, inside) = density_field(grid, a, inflation)?;
        let frac = inside as f64 / n as f64;
        if frac < MIN_COVERAGE {
            return Err(Error::Coverage { inside_fraction: frac });
        }
        escape.push(1.0 - frac);
        fields.push(field);
    }
    Ok(DensitySeries {
        times: times.to_vec(),
        fields,
        escape_fraction: escape,
        assignments,
        n_samples: n,
        error_inflation: inflation,
    })
}

fn assignment_inefficiency(grid: &BinGrid, assignment: &[Option<u32>], ranges: &[(usize, usize)]) -> f64 {
    let counts: Vec<Vec<u64>> = ranges
        .iter()
        .map(|&(a, b)| {
            let mut c = vec![0u64; grid.n_bins()];
            for bin in assignment[a..b].iter().flatten() {
                c[*bin as usize] += 1;
            }
            c
        })
        .collect();
    let sizes: Vec<usize> = ranges.iter().map(|(a, b)| b - a).collect();
    count_inefficiency(&counts, &sizes)
}

fn density_field(grid: &BinGrid, assignment: &[Option<u32>], inflation: f64) -> Result<(BinnedField, u64)> {
    let mut counts = vec![0u64; grid.n_bins()];
    for b in assignment.iter().flatten() {
        counts[*b as usize] += 1;
    }
    let inside: u64 = counts.iter().sum();
    let vol = grid.volume();
    let mut field = BinnedField::empty(grid.clone(), vec!["density".into()], counts.clone())?;
    if inside == 0 {
        return Ok((field, 0));
    }
    let m = inside as f64;
    for (bin, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let p = c as f64 / m;
        let se = (p * (1.0 - p) / m).sqrt() / vol * inflation;
        field.set(bin, 0, Some(p / vol), Some(se));
    }
    Ok((field, inside))
}

/// Histogram of `A` over a sample set, normalized as in [`estimate_p_alpha_t`].
pub fn density(samples: &SampleSet, grid: &BinGrid, relevant: &RelevantSet) -> Result<BinnedField> {
    check_dims(grid, relevant)?;
    let a = crate::relevant::assign(grid, relevant, samples);
    let inflation = assignment_inefficiency(grid, &a, &samples.chain_ranges()).sqrt();
    Ok(density_field(grid, &a, inflation)?.0)
}

/// `∂p/∂t ≈ (p(t_hi) - p(t_lo)) / (t_hi - t_lo)` from the same trajectories.
/// The error uses the per-trajectory change of bin membership, so the
/// correlation between the two times is accounted for.
pub fn density_rate(series: &DensitySeries, lo: usize, hi: usize) -> Result<BinnedField> {
    let (t0, t1) = (series.times[lo], series.times[hi]);
    if !(t1 > t0) {
        return Err(Error::InvalidArgument("rate needs t_hi > t_lo".into()));
    }
    let grid = &series.fields[lo].grid;
    let nb = grid.n_bins();
    // Σ d_i and Σ d_i² per bin, d_i = 1[bin at hi] - 1[bin at lo]
    let mut sum = vec![0i64; nb];
    let mut sq = vec![0u64; nb];
    for (a, b) in series.assignments[lo].iter().zip(&series.assignments[hi]) {
        if a == b {
            continue;
        }
        if let Some(a) = a {
            sum[*a as usize] -= 1;
            sq[*a as usize] += 1;
        }
        if let Some(b) = b {
            sum[*b as usize] += 1;
            sq[*b as usize] += 1;
        }
    }
    let n = series.n_samples as f64;
    let scale = 1.0 / (n * grid.volume() * (t1 - t0));
    let mut field = BinnedField::empty(grid.clone(), vec!["rate".into()], series.fields[lo].counts.clone())?;
    for bin in 0..nb {
        if series.fields[lo].counts[bin] == 0 && series.fields[hi].counts[bin] == 0 {
            continue;
        }
        let s = sum[bin] as f64;
        let var = (sq[bin] as f64 - s * s / n).max(0.0);
        // a bin nobody crosses still has the resolution of one crossing
        let se = var.max(1.0).sqrt() * scale * series.error_inflation;
        field.set(bin, 0, Some(s * scale), Some(se));
    }
    Ok(field)
}

/// `{H*, p} = Σ (∂_q H* ∂_p p - ∂_p H* ∂_q p)`, the Liouville transport of
/// `p` by `H*`, which is what `∂p/∂t` equals when the dissipative remainder
/// vanishes. Errors of the four gradients are propagated as independent.
pub fn relevant_density_drift(p: &BinnedField, hmf: &BinnedField) -> Result<GradientField> {
    p.check_same_grid(hmf)?;
    let d = p.grid.dim();
    if d % 2 != 0 {
        return Err(Error::GridMismatch("density drift needs (q, p) pairs of axes".into()));
    }
    let h = d / 2;
    let gp = gradient(p, 0);
    let gh = gradient(hmf, 0);
    let mut out = BinnedField::empty(p.grid.clone(), vec!["transport".into()], p.counts.clone())?;
    let mut isolated = 0;
    for bin in 0..p.n_bins() {
        if hmf.value(bin, 0).is_none() {
            continue;
        }
        let (Some(dp), Some(ep), Some(dh), Some(eh)) =
            (gp.field.vector(bin), gp.field.vector_error(bin), gh.field.vector(bin), gh.field.vector_error(bin))
        else {
            isolated += 1;
            continue;
        };
        let mut v = 0.0;
        let mut var = 0.0;
        for i in 0..h {
            v += dh[i] * dp[h + i] - dh[h + i] * dp[i];
            var += (eh[i] * dp[h + i]).powi(2) + (dh[i] * ep[h + i]).powi(2);
            var += (eh[h + i] * dp[i]).powi(2) + (dh[h + i] * ep[i]).powi(2);
        }
        out.set(bin, 0, Some(v), Some(var.sqrt()));
    }
    Ok(GradientField { field: out, isolated_bins: isolated })
}
