//! The Zwanzig projector on binned relevant observables, the drift check
//! against the Hamiltonian of mean force, and comparison with Mori projection.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{BinGrid, BinnedField};
use crate::mean_force::{drift_from_hmf, estimate_hmf, GradientField, HmfEstimate, MIN_COVERAGE};
use crate::observables::{liouvillian_drift, Observable};
use crate::relevant::{accumulate, accumulate_by_chain, mean_inefficiency, BinStats, RelevantSet};
use crate::sampling::SampleSet;
use crate::system::ClassicalSystem;

/// Bins with fewer samples than this (or with a neighbour below it) are not
/// used for residual statistics.
pub const DEFAULT_MIN_COUNT: u64 = 25;
pub const SIGMA_LEVEL: f64 = 3.0;

/// `𝒫B` as per-bin conditional expectations `Tr(ϱψ_α B)/Tr(ϱψ_α)`.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectedObservable {
    pub field: BinnedField,
    /// Which ensemble supplied the weight.
    pub weight: String,
}

impl ProjectedObservable {
    pub fn grid(&self) -> &BinGrid {
        &self.field.grid
    }

    /// `(𝒫B)(Γ)`: the value of the bin containing `A(Γ)`.
    pub fn evaluate(&self, relevant: &RelevantSet, x: &[f64]) -> Option<f64> {
        self.field.lookup(&relevant.eval(x), 0)
    }

    /// `𝒫B` as a phase function; `NaN` where the bin is empty or outside.
    pub fn as_observable<'a>(&'a self, relevant: &'a RelevantSet) -> impl Observable + 'a {
        ProjectedFn { projected: self, relevant }
    }
}

struct ProjectedFn<'a> {
    projected: &'a ProjectedObservable,
    relevant: &'a RelevantSet,
}

impl Observable for ProjectedFn<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.projected.evaluate(self.relevant, x).unwrap_or(f64::NAN)
    }
}

fn stats_to_field(grid: &BinGrid, stats: &BinStats, names: Vec<String>, inflation: &[f64]) -> Result<BinnedField> {
    let mut field = BinnedField::empty(grid.clone(), names, stats.n.clone())?;
    for bin in 0..grid.n_bins() {
        for c in 0..stats.k {
            if let Some(m) = stats.mean(bin, c) {
                if !m.is_finite() {
                    return Err(Error::NonFinite("bin average"));
                }
                let se = stats.standard_error(bin, c).map(|e| e * inflation[c]);
                field.set(bin, c, Some(m), se);
            }
        }
    }
    Ok(field)
}

/// Conditional expectation of `b` in each bin of `A`, with errors `s/√n · √g`
/// (`g` pooled from the between-chain scatter of bin means).
pub fn zwanzig_project(
    b: &dyn Observable,
    samples: &SampleSet,
    grid: &BinGrid,
    relevant: &RelevantSet,
) -> Result<ProjectedObservable> {
    let (stats, chains) = accumulate_by_chain(grid, relevant, samples, 1, |x, out| out[0] = b.value(x));
    let inflation = [mean_inefficiency(&stats, &chains, 0).sqrt()];
    Ok(ProjectedObservable {
        field: stats_to_field(grid, &stats, vec!["projection".into()], &inflation)?,
        weight: format!("sampled canonical, beta = {}", samples.beta),
    })
}

/// Per-bin average of `{A_k, H}` over the samples in the bin.
pub fn conditional_drift(
    samples: &SampleSet,
    grid: &BinGrid,
    relevant: &RelevantSet,
    system: &dyn ClassicalSystem,
) -> Result<BinnedField> {
    let obs = relevant.observables();
    let k = obs.len();
    let (stats, chains) = accumulate_by_chain(grid, relevant, samples, k, |x, out| {
        match liouvillian_drift(&obs, system, x) {
            Ok(v) => out.copy_from_slice(&v),
            Err(_) => out.fill(f64::NAN),
        }
    });
    let inflation: Vec<f64> = (0..k).map(|c| mean_inefficiency(&stats, &chains, c).sqrt()).collect();
    stats_to_field(grid, &stats, relevant.labels().to_vec(), &inflation)
}

/// One bin of a field-vs-field comparison.
#[derive(Debug, Clone, Serialize)]
pub struct BinResidual {
    pub bin: usize,
    pub centre: Vec<f64>,
    pub count: u64,
    pub left: Vec<f64>,
    pub left_error: Vec<f64>,
    pub right: Vec<f64>,
    pub right_error: Vec<f64>,
    pub residual: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Every component within `SIGMA_LEVEL·σ`.
    pub within: bool,
}

/// Residuals `left - right` over selected bins, with combined errors.
#[derive(Debug, Clone, Serialize)]
pub struct FieldComparison {
    pub left_name: String,
    pub right_name: String,
    pub components: Vec<String>,
    pub grid: BinGrid,
    pub min_count: u64,
    pub sigma_level: f64,
    pub bins: Vec<BinResidual>,
    pub compared_bins: usize,
    pub within_bins: usize,
    pub acceptance_fraction: f64,
    /// `Σ (r/σ)²` over compared components.
    pub chi2: f64,
    pub dof: usize,
    pub max_abs_residual: f64,
}

impl FieldComparison {
    pub fn passes(&self, fraction: f64) -> bool {
        self.compared_bins > 0 && self.acceptance_fraction >= fraction
    }

    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }

    /// Columns: `centre_<axis>...`, `count`, then per component
    /// `left_<c>,left_err_<c>,right_<c>,right_err_<c>,residual_<c>,sigma_<c>`, then `within`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.grid.axes().iter().map(|a| format!("centre_{}", a.label)).collect();
        header.push("count".into());
        for c in &self.components {
            for p in ["left", "left_err", "right", "right_err", "residual", "sigma"] {
                header.push(format!("{p}_{c}"));
            }
        }
        header.push("within".into());
        w.write_record(&header)?;
        for b in &self.bins {
            let mut row: Vec<String> = b.centre.iter().map(|x| x.to_string()).collect();
            row.push(b.count.to_string());
            for c in 0..self.components.len() {
                for v in [b.left[c], b.left_error[c], b.right[c], b.right_error[c], b.residual[c], b.sigma[c]] {
                    row.push(v.to_string());
                }
            }
            row.push(b.within.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bins with at least `min_count` samples whose neighbours along every axis
/// exist and also reach `min_count`.
pub fn interior_mask(grid: &BinGrid, counts: &[u64], min_count: u64) -> Vec<bool> {
    (0..grid.n_bins())
        .map(|bin| {
            counts[bin] >= min_count
                && (0..grid.dim()).all(|axis| {
                    [true, false].iter().all(|&up| {
                        grid.neighbour(bin, axis, up).is_some_and(|n| counts[n] >= min_count)
                    })
                })
        })
        .collect()
}

/// Compares two fields on the bins selected by `mask` where both are defined.
pub fn compare_fields(
    left: (&str, &BinnedField),
    right: (&str, &BinnedField),
    mask: &[bool],
    min_count: u64,
) -> Result<FieldComparison> {
    let (a, b) = (left.1, right.1);
    a.check_same_grid(b)?;
    if a.n_components() != b.n_components() {
        return Err(Error::GridMismatch("fields have different component counts".into()));
    }
    let grid = &a.grid;
    let mut bins = Vec::new();
    let mut chi2 = 0.0;
    let mut max_abs: f64 = 0.0;
    for bin in (0..grid.n_bins()).filter(|&b| mask[b]) {
        let (Some(l), Some(le), Some(r), Some(re)) = (a.vector(bin), a.vector_error(bin), b.vector(bin), b.vector_error(bin))
        else {
            continue;
        };
        let residual: Vec<f64> = l.iter().zip(&r).map(|(x, y)| x - y).collect();
        let sigma: Vec<f64> = le.iter().zip(&re).map(|(x, y)| x.hypot(*y)).collect();
        let mut within = true;
        for (res, s) in residual.iter().zip(&sigma) {
            max_abs = max_abs.max(res.abs());
            if *s > 0.0 {
                chi2 += (res / s).powi(2);
            }
            within &= res.abs() <= SIGMA_LEVEL * s;
        }
        bins.push(BinResidual {
            bin,
            centre: grid.centre(bin),
            count: a.counts[bin],
            left: l,
            left_error: le,
            right: r,
            right_error: re,
            residual,
            sigma,
            within,
        });
    }
    let compared = bins.len();
    let within = bins.iter().filter(|b| b.within).count();
    Ok(FieldComparison {
        left_name: left.0.into(),
        right_name: right.0.into(),
        components: a.components.clone(),
        grid: grid.clone(),
        min_count,
        sigma_level: SIGMA_LEVEL,
        bins,
        compared_bins: compared,
        within_bins: within,
        acceptance_fraction: if compared == 0 { 0.0 } else { within as f64 / compared as f64 },
        chi2,
        dof: compared * a.n_components(),
        max_abs_residual: max_abs,
    })
}

/// Everything computed for one drift check.
#[derive(Debug, Clone, Serialize)]
pub struct DriftResidualReport {
    pub hmf: HmfEstimate,
    pub conditional: BinnedField,
    pub hmf_drift: GradientField,
    pub residual: FieldComparison,
}

/// `Tr(ϱψ_α{A,H})/Tr(ϱψ_α)` against `{A, H*}` from the histogram estimate.
pub fn drift_residual_report(
    samples: &SampleSet,
    system: &dyn ClassicalSystem,
    grid: &BinGrid,
    relevant: &RelevantSet,
    min_count: u64,
) -> Result<DriftResidualReport> {
    let hmf = estimate_hmf(samples, grid, relevant)?;
    let conditional = conditional_drift(samples, grid, relevant, system)?;
    let hmf_drift = drift_from_hmf(&hmf.field)?;
    let mask = interior_mask(grid, &hmf.field.counts, min_count);
    let residual = compare_fields(("conditional_drift", &conditional), ("hmf_drift", &hmf_drift.field), &mask, min_count)?;
    Ok(DriftResidualReport { hmf, conditional, hmf_drift, residual })
}

/// `(B, φ)φ` under the sampled weight, with `φ` normalized to `(φ, φ) = 1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MoriProjection {
    /// `(B, φ̂)`.
    pub coefficient: f64,
    /// `√(φ, φ)` before normalization.
    pub phi_norm: f64,
}

impl MoriProjection {
    pub fn evaluate(&self, phi: &dyn Observable, x: &[f64]) -> f64 {
        self.coefficient * phi.value(x) / self.phi_norm
    }

    pub fn norm(&self) -> f64 {
        self.coefficient.abs()
    }
}

const MIN_PHI_NORM: f64 = 1e-12;

pub fn mori_project(b: &dyn Observable, phi: &dyn Observable, samples: &SampleSet) -> Result<MoriProjection> {
    let n = samples.len() as f64;
    let (mut bp, mut pp) = (0.0, 0.0);
    for x in samples.points() {
        let f = phi.value(x);
        bp += b.value(x) * f;
        pp += f * f;
    }
    let phi_norm = (pp / n).sqrt();
    if !(phi_norm > MIN_PHI_NORM) {
        return Err(Error::InvalidArgument(format!("φ has norm {phi_norm:e}")));
    }
    Ok(MoriProjection { coefficient: bp / n / phi_norm, phi_norm })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormComparison {
    pub zwanzig: f64,
    pub mori: f64,
    /// `‖𝒫^Z B‖ - ‖𝒫^M B‖`.
    pub difference: f64,
    /// Standard error of the difference from the spread over chains.
    pub sigma: f64,
    /// `φ` was replaced by its bin average, which places it in the range of `𝒫^Z`.
    pub binned_phi: bool,
    /// Expected excess of the sampled `‖𝒫^Z B‖` over its population value,
    /// from the noise of each bin mean (`Σ_α s²_α / N`, propagated to the norm).
    pub noise_bias: f64,
}

impl NormComparison {
    /// `‖𝒫^Z B‖ ≥ ‖𝒫^M B‖` up to `k` standard errors.
    pub fn holds(&self, k: f64) -> bool {
        self.difference >= -k * self.sigma
    }

    /// `‖𝒫^Z B‖ > ‖𝒫^M B‖` by more than `k` standard errors.
    pub fn strict(&self, k: f64) -> bool {
        self.difference > k * self.sigma
    }
}

fn norms_on_range(
    b: &dyn Observable,
    phi: &dyn Observable,
    samples: &SampleSet,
    grid: &BinGrid,
    relevant: &RelevantSet,
    range: (usize, usize),
    binned_phi: bool,
) -> Result<(f64, f64, f64)> {
    let stats = accumulate(grid, relevant, samples, range, 2, |x, out| {
        out[0] = b.value(x);
        out[1] = phi.value(x);
    });
    let inside: u64 = stats.n.iter().sum();
    let total = range.1 - range.0;
    if (inside as f64) < MIN_COVERAGE * total as f64 {
        return Err(Error::Coverage { inside_fraction: inside as f64 / total as f64 });
    }
    let n = inside as f64;
    let (mut zz, mut bphi, mut phiphi, mut noise) = (0.0, 0.0, 0.0, 0.0);
    for bin in 0..grid.n_bins() {
        let c = stats.n[bin] as f64;
        if c == 0.0 {
            continue;
        }
        let mb = stats.mean[bin * 2];
        let mphi = stats.mean[bin * 2 + 1];
        zz += c * mb * mb;
        if c > 1.0 {
            noise += stats.m2[bin * 2] / (c - 1.0);
        }
        if binned_phi {
            bphi += c * mb * mphi;
            phiphi += c * mphi * mphi;
        }
    }
    if !binned_phi {
        for i in range.0..range.1 {
            let x = samples.point(i);
            if relevant.bin(grid, x).is_some() {
                let f = phi.value(x);
                bphi += b.value(x) * f;
                phiphi += f * f;
            }
        }
    }
    let phi_norm = (phiphi / n).sqrt();
    if !(phi_norm > MIN_PHI_NORM) {
        return Err(Error::InvalidArgument(format!("φ has norm {phi_norm:e}")));
    }
    let zwanzig = (zz / n).sqrt();
    let bias = if zwanzig > 0.0 { noise / n / (2.0 * zwanzig) } else { 0.0 };
    Ok((zwanzig, (bphi / n / phi_norm).abs(), bias))
}

/// `(‖𝒫^Z B‖, ‖𝒫^M B‖)` with norms `‖X‖² = Tr(ϱX²)` estimated over the
/// samples inside the grid. The error of the difference comes from the
/// spread of per-chain estimates.
pub fn norm_compare(
    b: &dyn Observable,
    samples: &SampleSet,
    grid: &BinGrid,
    relevant: &RelevantSet,
    phi: &dyn Observable,
    binned_phi: bool,
) -> Result<NormComparison> {
    let (zwanzig, mori, noise_bias) = norms_on_range(b, phi, samples, grid, relevant, (0, samples.len()), binned_phi)?;
    let ranges = samples.chain_ranges();
    let sigma = if ranges.len() >= 2 {
        let diffs: Vec<f64> = ranges
            .iter()
            .map(|&r| norms_on_range(b, phi, samples, grid, relevant, r, binned_phi).map(|(z, m, _)| z - m))
            .collect::<Result<_>>()?;
        let k = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / k;
        (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(NormComparison { zwanzig, mori, difference: zwanzig - mori, sigma, binned_phi, noise_bias })
}

/// `‖B‖² = ‖𝒫B‖² + ‖𝒬B‖²` on the samples inside the grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Pythagoras {
    pub total: f64,
    pub projected: f64,
    pub orthogonal: f64,
    /// `total - projected - orthogonal`.
    pub defect: f64,
    /// `(𝒬B, 𝒫B)`.
    pub cross: f64,
}

pub fn pythagoras(b: &dyn Observable, samples: &SampleSet, grid: &BinGrid, relevant: &RelevantSet) -> Result<Pythagoras> {
    let stats = accumulate(grid, relevant, samples, (0, samples.len()), 1, |x, out| out[0] = b.value(x));
    let n: f64 = stats.n.iter().sum::<u64>() as f64;
    if n == 0.0 {
        return Err(Error::Coverage { inside_fraction: 0.0 });
    }
    let mut total = 0.0;
    let mut cross = 0.0;
    for x in samples.points() {
        if let Some(bin) = relevant.bin(grid, x) {
            let v = b.value(x);
            total += v * v;
            cross += (v - stats.mean[bin]) * stats.mean[bin];
        }
    }
    let projected: f64 = (0..grid.n_bins()).map(|bin| stats.n[bin] as f64 * stats.mean[bin].powi(2)).sum();
    let orthogonal: f64 = stats.m2.iter().sum();
    let (total, projected, orthogonal, cross) = (total / n, projected / n, orthogonal / n, cross / n);
    Ok(Pythagoras { total, projected, orthogonal, defect: total - projected - orthogonal, cross })
}

/// The relevant density `𝒫†μ = ϱ · r(A)`, stored as the bin ratio
/// `r_α = p_μ(α) / p_ϱ(α)`.
#[derive(Debug, Clone, Serialize)]
pub struct RelevantDensity {
    pub ratio: BinnedField,
    /// Fraction of `μ` falling in bins that `ϱ` never visits.
    pub unsupported_mass: f64,
}

impl RelevantDensity {
    pub fn ratio_at(&self, relevant: &RelevantSet, x: &[f64]) -> Option<f64> {
        self.ratio.lookup(&relevant.eval(x), 0)
    }
}

/// `𝒫†μ` for `μ` given by samples, relative to the reference `ϱ` samples.
pub fn adjoint_project(mu: &SampleSet, rho: &SampleSet, grid: &BinGrid, relevant: &RelevantSet) -> Result<RelevantDensity> {
    let count = |s: &SampleSet| accumulate(grid, relevant, s, (0, s.len()), 0, |_, _| {}).n;
    let (cm, cr) = (count(mu), count(rho));
    let (nm, nr) = (mu.len() as f64, rho.len() as f64);
    let mut ratio = BinnedField::empty(grid.clone(), vec!["ratio".into()], cr.clone())?;
    let mut unsupported = 0u64;
    for bin in 0..grid.n_bins() {
        if cr[bin] == 0 {
            unsupported += cm[bin];
            continue;
        }
        let r = (cm[bin] as f64 / nm) / (cr[bin] as f64 / nr);
        let rel = (1.0 / cm[bin].max(1) as f64 + 1.0 / cr[bin] as f64).sqrt();
        ratio.set(bin, 0, Some(r), Some(r * rel));
    }
    Ok(RelevantDensity { ratio, unsupported_mass: unsupported as f64 / nm })
}

/// `𝒫†(ϱX)` with `ϱ` given by samples: the ratio `Σ_{i∈α} X_i / n_α`.
pub fn adjoint_of_weighted(x_obs: &dyn Observable, rho: &SampleSet, grid: &BinGrid, relevant: &RelevantSet) -> Result<BinnedField> {
    let mut sums = vec![0.0; grid.n_bins()];
    let mut counts = vec![0u64; grid.n_bins()];
    for x in rho.points() {
        if let Some(bin) = relevant.bin(grid, x) {
            sums[bin] += x_obs.value(x);
            counts[bin] += 1;
        }
    }
    let mut out = BinnedField::empty(grid.clone(), vec!["ratio".into()], counts.clone())?;
    for bin in 0..grid.n_bins() {
        if counts[bin] > 0 {
            out.set(bin, 0, Some(sums[bin] / counts[bin] as f64), None);
        }
    }
    Ok(out)
}

/// `Tr(μ 𝒫X)` and `Tr(X 𝒫†μ)` as sample averages.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdjointCheck {
    pub mu_side: f64,
    pub rho_side: f64,
    pub sigma: f64,
}

pub fn adjoint_consistency(
    x_obs: &dyn Observable,
    mu: &SampleSet,
    rho: &SampleSet,
    grid: &BinGrid,
    relevant: &RelevantSet,
) -> Result<AdjointCheck> {
    let px = zwanzig_project(x_obs, rho, grid, relevant)?;
    let dens = adjoint_project(mu, rho, grid, relevant)?;
    let vals: Vec<f64> = mu.points().map(|x| px.evaluate(relevant, x).unwrap_or(0.0)).collect();
    let n = vals.len() as f64;
    let mu_side = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mu_side).powi(2)).sum::<f64>() / (n - 1.0);
    let rho_side = rho
        .points()
        .map(|x| dens.ratio_at(relevant, x).map(|r| r * x_obs.value(x)).unwrap_or(0.0))
        .sum::<f64>()
        / rho.len() as f64;
    Ok(AdjointCheck { mu_side, rho_side, sigma: (var / n).sqrt() * mu.error_inflation() })
}
