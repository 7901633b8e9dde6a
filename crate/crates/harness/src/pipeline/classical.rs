use std::time::Instant;

use meanforce_classical::{
    compare_fields, density_rate, drift_residual_report, estimate_hmf, estimate_p_alpha_t, fit_quadratic,
    free_energy_pinned, gaussian_as_separable, gaussian_hmf_oracle, interior_mask, norm_compare,
    quartic_hmf_quadrature, relevant_density_drift, sample_canonical, BinGrid, BinnedField, ClassicalSystem,
    Coordinate, CoupledOscillators, FieldComparison, Polynomial, QuadratureConfig, RelevantSet, SampleSet,
    SeparableHmf, SIGMA_LEVEL,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::random;
use crate::report::{Artifacts, Check};
use crate::scenario::{ClassicalDriftParams, Model, RelevantDensityParams};

/// Fraction of compared bins required within 3σ.
pub const BIN_ACCEPTANCE: f64 = 0.95;
/// Relative tolerance on the fitted effective spring constant.
pub const SPRING_TOLERANCE: f64 = 0.02;
/// Half-width of the `q` range for oracle free energies.
const ORACLE_RANGE: f64 = 12.0;

#[derive(Serialize)]
struct SamplingSummary<'a> {
    samples: usize,
    acceptance_rate: f64,
    statistical_inefficiency: f64,
    chains: &'a [meanforce_classical::ChainDiagnostics],
}

#[derive(Serialize)]
struct ComparisonSummary<'a> {
    left: &'a str,
    right: &'a str,
    compared_bins: usize,
    within_bins: usize,
    acceptance_fraction: f64,
    chi2: f64,
    dof: usize,
    reduced_chi2: f64,
    max_abs_residual: f64,
    min_count: u64,
    sigma_level: f64,
}

impl<'a> From<&'a FieldComparison> for ComparisonSummary<'a> {
    fn from(c: &'a FieldComparison) -> Self {
        Self {
            left: &c.left_name,
            right: &c.right_name,
            compared_bins: c.compared_bins,
            within_bins: c.within_bins,
            acceptance_fraction: c.acceptance_fraction,
            chi2: c.chi2,
            dof: c.dof,
            reduced_chi2: c.reduced_chi2(),
            max_abs_residual: c.max_abs_residual,
            min_count: c.min_count,
            sigma_level: c.sigma_level,
        }
    }
}

fn stage(art: &mut Artifacts, name: &str, start: Instant) {
    art.stages.push((name.into(), start.elapsed().as_secs_f64()));
}

fn field_csv(art: &mut Artifacts, name: &str, field: &BinnedField) -> Result<()> {
    let mut buf = Vec::new();
    field.write_csv(&mut buf)?;
    art.table(name, buf);
    Ok(())
}

fn comparison_csv(art: &mut Artifacts, name: &str, cmp: &FieldComparison) -> Result<()> {
    let mut buf = Vec::new();
    cmp.write_csv(&mut buf)?;
    art.table(name, buf);
    Ok(())
}

fn sample(model: &Model, beta: f64, n: usize, seed: u64, cfg: &meanforce_classical::SamplerConfig, art: &mut Artifacts)
    -> Result<(CoupledOscillators, SampleSet)> {
    let sys = model.build()?;
    let start = Instant::now();
    let samples = sample_canonical(&sys, beta, n, seed, cfg)?;
    stage(art, "sampling", start);
    art.result(
        "sampling",
        &SamplingSummary {
            samples: samples.len(),
            acceptance_rate: samples.acceptance_rate(),
            statistical_inefficiency: samples.statistical_inefficiency(),
            chains: &samples.chains,
        },
    )?;
    Ok((sys, samples))
}

/// The exact mean force where one is available: closed form for quadratic
/// models, quadrature for the quartic pair.
fn oracle(sys: &CoupledOscillators, beta: f64) -> Result<Option<(&'static str, SeparableHmf)>> {
    if sys.n_system() != 1 {
        return Ok(None);
    }
    if sys.is_quadratic() {
        return Ok(Some(("gaussian", gaussian_as_separable(&gaussian_hmf_oracle(sys, beta)?)?)));
    }
    if sys.n_env() == 1 {
        return Ok(Some(("quadrature", quartic_hmf_quadrature(sys, beta, QuadratureConfig::default())?)));
    }
    Ok(None)
}

pub fn random_polynomial(rng: &mut ChaCha8Rng, dim: usize) -> Polynomial {
    let terms = (0..rng.random_range(1..=4))
        .map(|_| (rng.random_range(-1.0..1.0), (0..dim).map(|_| rng.random_range(0..=2)).collect()))
        .collect();
    Polynomial::new(dim, terms).expect("well-formed terms")
}

#[derive(Serialize)]
struct NormRow {
    index: usize,
    observable: String,
    zwanzig: f64,
    mori: f64,
    difference: f64,
    sigma: f64,
    noise_bias: f64,
    holds: bool,
    strict: bool,
}

fn describe_polynomial(p: &Polynomial, labels: &[&str]) -> String {
    let mut s = String::new();
    for (c, e) in &p.terms {
        s.push_str(&format!("{c:+.4}"));
        for (k, &power) in e.iter().enumerate() {
            if power > 0 {
                s.push('*');
                s.push_str(labels[k]);
                if power > 1 {
                    s.push_str(&format!("^{power}"));
                }
            }
        }
        s.push(' ');
    }
    s.trim_end().to_string()
}

pub fn classical_drift(seed: u64, p: &ClassicalDriftParams, art: &mut Artifacts) -> Result<()> {
    let (sys, samples) = sample(&p.model, p.beta, p.samples, seed, &p.sampler, art)?;
    let rel = RelevantSet::for_samples(&samples);
    let values = rel.values(&samples);
    let grid = BinGrid::covering(rel.labels(), values.iter().map(|v| v.as_slice()), p.bins)?;
    drop(values);

    let start = Instant::now();
    let report = drift_residual_report(&samples, &sys, &grid, &rel, p.min_count)?;
    stage(art, "drift_residuals", start);
    art.warnings.empty_bins += report.hmf.empty_interior_bins + report.hmf_drift.isolated_bins;
    field_csv(art, "hmf", &report.hmf.field)?;
    field_csv(art, "conditional_drift", &report.conditional)?;
    field_csv(art, "hmf_drift", &report.hmf_drift.field)?;
    comparison_csv(art, "drift_residuals", &report.residual)?;
    art.result("drift_residuals", &ComparisonSummary::from(&report.residual))?;
    art.headline("acceptance_fraction", report.residual.acceptance_fraction);
    art.headline("reduced_chi2", report.residual.reduced_chi2());
    art.check(Check::at_least("drift_acceptance_fraction", report.residual.acceptance_fraction, BIN_ACCEPTANCE));

    let fit = fit_quadratic(&report.hmf.field, 0, p.min_count)?;
    let (k_fit, k_err) = fit.spring_constant();
    art.result("quadratic_fit", &fit)?;
    art.headline("k_eff_fit", k_fit);
    art.headline("k_eff_fit_error", k_err);
    let pinned = free_energy_pinned(&report.hmf, &fit)?;
    art.headline("free_energy", pinned.value);
    art.headline("free_energy_error", pinned.error);

    let start = Instant::now();
    if let Some((name, exact)) = oracle(&sys, p.beta)? {
        let drift = exact.drift_field(&grid, report.conditional.counts.clone())?;
        let mask = interior_mask(&grid, &report.hmf.field.counts, p.min_count);
        let cmp = compare_fields(("conditional", &report.conditional), (name, &drift), &mask, p.min_count)?;
        comparison_csv(art, "oracle_residuals", &cmp)?;
        art.result("oracle_residuals", &ComparisonSummary::from(&cmp))?;
        art.headline("oracle_acceptance_fraction", cmp.acceptance_fraction);
        art.check(Check::at_least("oracle_acceptance_fraction", cmp.acceptance_fraction, BIN_ACCEPTANCE));
        let f_exact = exact.free_energy(ORACLE_RANGE);
        art.headline("free_energy_expected", f_exact);
        if let Some(k) = p.model.expected_spring() {
            art.headline("k_eff_expected", k);
            art.check(Check::at_most("k_eff_relative_error", (k_fit - k).abs() / k, SPRING_TOLERANCE));
            // the quadratic-fit gauge is exact only for a quadratic H*
            art.check(Check::at_most(
                "free_energy_sigma",
                (pinned.value - f_exact).abs() / pinned.error,
                SIGMA_LEVEL,
            ));
        }
    }
    stage(art, "oracle", start);

    if p.norm_checks > 0 {
        let start = Instant::now();
        let mut rng = random::stream(seed, 1);
        let phi = Coordinate(0);
        let labels: Vec<String> = (0..samples.phase_dim())
            .map(|i| {
                let n = samples.n_system + samples.n_env;
                if i < n { format!("q{i}") } else { format!("p{}", i - n) }
            })
            .collect();
        let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        let mut rows = Vec::with_capacity(p.norm_checks);
        for index in 0..p.norm_checks {
            let b = random_polynomial(&mut rng, samples.phase_dim());
            let cmp = norm_compare(&b, &samples, &grid, &rel, &phi, true)?;
            rows.push(NormRow {
                index,
                observable: describe_polynomial(&b, &labels),
                zwanzig: cmp.zwanzig,
                mori: cmp.mori,
                difference: cmp.difference,
                sigma: cmp.sigma,
                noise_bias: cmp.noise_bias,
                holds: cmp.holds(SIGMA_LEVEL),
                strict: cmp.strict(SIGMA_LEVEL),
            });
        }
        let n = rows.len() as f64;
        let holds = rows.iter().filter(|r| r.holds).count() as f64 / n;
        let strict = rows.iter().filter(|r| r.strict).count() as f64 / n;
        art.records("norm_checks", &rows)?;
        art.headline("norm_holds_fraction", holds);
        art.headline("norm_strict_fraction", strict);
        art.check(Check::at_least("zwanzig_norm_dominates", holds, 1.0));
        stage(art, "norm_checks", start);
    }
    Ok(())
}

/// `(bins within kσ of zero, compared bins)` over the masked defined bins.
fn zero_consistency(field: &BinnedField, mask: &[bool]) -> (usize, usize) {
    let (mut within, mut total) = (0, 0);
    for b in (0..field.n_bins()).filter(|&b| mask[b]) {
        if let (Some(v), Some(e)) = (field.value(b, 0), field.error(b, 0)) {
            total += 1;
            if v.abs() <= SIGMA_LEVEL * e {
                within += 1;
            }
        }
    }
    (within, total)
}

#[derive(Serialize)]
struct ZeroSummary {
    compared_bins: usize,
    within_bins: usize,
    fraction: f64,
}

/// Density at `times[1]`, its rate from `times[0]` to `times[2]`, and the
/// bracket `{H*, p}` with `H*` from the equilibrium histogram.
pub fn relevant_density(seed: u64, p: &RelevantDensityParams, art: &mut Artifacts) -> Result<()> {
    let (sys, samples) = sample(&p.model, p.beta, p.samples, seed, &p.sampler, art)?;
    let rel = RelevantSet::for_samples(&samples);
    let initial = if p.displacement.is_empty() { samples.clone() } else { samples.displaced(&p.displacement)? };
    let values: Vec<Vec<f64>> = rel.values(&samples).into_iter().chain(rel.values(&initial)).collect();
    let grid = BinGrid::covering(rel.labels(), values.iter().map(|v| v.as_slice()), p.bins)?;
    drop(values);

    let start = Instant::now();
    let hmf = estimate_hmf(&samples, &grid, &rel)?;
    field_csv(art, "hmf", &hmf.field)?;
    stage(art, "hmf", start);

    let start = Instant::now();
    let series = estimate_p_alpha_t(&initial, &sys, &grid, &rel, &p.times, p.dt, p.integrator)?;
    stage(art, "propagation", start);
    art.headline("escape_fraction", series.escape_fraction.iter().copied().fold(0.0, f64::max));
    for (k, f) in series.fields.iter().enumerate() {
        field_csv(art, &format!("density_t{k}"), f)?;
    }
    let rate = density_rate(&series, 0, 2)?;
    let transport = relevant_density_drift(&series.fields[1], &hmf.field)?;
    art.warnings.empty_bins += hmf.empty_interior_bins + transport.isolated_bins;
    field_csv(art, "density_rate", &rate)?;
    field_csv(art, "transport", &transport.field)?;

    let mut mask = interior_mask(&grid, &series.fields[1].counts, p.min_count);
    for (m, ok) in mask.iter_mut().zip(interior_mask(&grid, &hmf.field.counts, p.min_count)) {
        *m &= ok;
    }
    if p.displacement.is_empty() {
        for (name, field) in [("transport", &transport.field), ("rate", &rate)] {
            let (within, total) = zero_consistency(field, &mask);
            let fraction = if total > 0 { within as f64 / total as f64 } else { 0.0 };
            art.result(&format!("{name}_zero"), &ZeroSummary { compared_bins: total, within_bins: within, fraction })?;
            art.headline(&format!("{name}_zero_fraction"), fraction);
            art.check(Check::at_least(&format!("{name}_consistent_with_zero"), fraction, BIN_ACCEPTANCE));
        }
    } else {
        let cmp = compare_fields(("rate", &rate), ("transport", &transport.field), &mask, p.min_count)?;
        comparison_csv(art, "rate_vs_transport", &cmp)?;
        art.result("rate_vs_transport", &ComparisonSummary::from(&cmp))?;
        art.headline("transport_agreement", cmp.acceptance_fraction);
        // without coupling H* = H_S and the bracket is the whole Liouville flow;
        // otherwise the memory term makes this a finding, not a test
        if p.model.coupling == 0.0 && p.model.quartic == 0.0 {
            art.check(Check::at_least("rate_matches_transport", cmp.acceptance_fraction, BIN_ACCEPTANCE));
        }
    }
    Ok(())
}
