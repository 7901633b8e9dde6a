use std::time::Instant;

use meanforce_core::decomposition::DecompositionConfig;
use meanforce_core::grabert::reduced_gibbs;
use meanforce_core::inner_product::sigma_transform_quadrature;
use meanforce_core::tcl::{lindblad_dissipator, split_with_metric, uniform_grid, SuperoperatorMetric};
use meanforce_core::{
    appendix_probe, compare_heff_hmf, drift_term_quantum, gibbs_state, hamiltonian_of_mean_force,
    heisenberg_generator, miracle_residual, necessary_condition_residual, reduced_map, schrodinger_generator,
    sigma_transform, tcl_generator, verify_propagator_decomposition, work_flux, CMatrix, ClassicalClassicalState,
    CompositeHamiltonian, GeneratorConfig, GeneratorSplit, GrabertProjector, HermitianOperator, HilbertLayout,
    InnerProductSpec, Superoperator, Weight, C,
};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::random;
use crate::report::{Artifacts, Check};
use crate::scenario::{AppendixProbeParams, DecompositionParams, Metric, QuantumInnerproductParams, TclSplitParams};

/// Tolerances of the exact identities.
pub const MIRACLE_TOL: f64 = 1e-10;
pub const NECESSARY_TOL: f64 = 1e-10;
pub const DRIFT_TOL: f64 = 1e-8;
pub const SIGMA_QUADRATURE_TOL: f64 = 1e-10;
pub const FACTORIZED_PROBE_TOL: f64 = 1e-12;
pub const PROBE_QUADRATURE_TOL: f64 = 1e-8;
pub const DECOMPOSITION_TOL: f64 = 1e-8;
pub const COMMUTATOR_RECOVERY_TOL: f64 = 1e-10;
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
pub const UNCOUPLED_GENERATOR_TOL: f64 = 1e-8;
pub const UNCOUPLED_FLUX_TOL: f64 = 1e-7;

fn stage(art: &mut Artifacts, name: &str, start: Instant) {
    art.stages.push((name.into(), start.elapsed().as_secs_f64()));
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

#[derive(Serialize)]
struct MiracleRow {
    instance: usize,
    dim: usize,
    beta: f64,
    lhs_norm: f64,
    rhs_norm: f64,
    residual: f64,
    /// closed-form Σ against α-quadrature; empty above dimension 4
    sigma_quadrature: Option<f64>,
    floored_eigenvalues: usize,
}

#[derive(Serialize)]
struct ReducedRow {
    instance: usize,
    d_system: usize,
    d_env: usize,
    beta: f64,
    factorized_residual: f64,
    factorized_condition: f64,
    drift_difference: f64,
    /// same Hamiltonians with a random interaction of unit norm
    correlated_residual: f64,
    correlated_drift_difference: f64,
}

pub fn quantum_innerproduct(seed: u64, p: &QuantumInnerproductParams, art: &mut Artifacts) -> Result<()> {
    let start = Instant::now();
    let mut rng = random::stream(seed, 2);
    let mut rows = Vec::with_capacity(p.instances);
    for instance in 0..p.instances {
        let dim = if instance == 0 { p.max_dim } else { random::dim(&mut rng, 2, p.max_dim) };
        let beta = p.betas[instance % p.betas.len()];
        let h = random::unit_hermitian(&mut rng, dim);
        let x = random::ginibre(&mut rng, dim);
        let rep = miracle_residual(&x, &h, beta)?;
        let weight = Weight::gibbs(&h, beta)?;
        let sigma_quadrature = if dim <= 4 {
            let exact = sigma_transform(&x, &weight)?;
            let quad = sigma_transform_quadrature(&x, &weight, p.quadrature_nodes)?;
            Some((exact - quad).norm())
        } else {
            None
        };
        art.warnings.eigenvalue_floors += weight.floored();
        rows.push(MiracleRow {
            instance,
            dim,
            beta,
            lhs_norm: rep.lhs_norm,
            rhs_norm: rep.rhs_norm,
            residual: rep.residual,
            sigma_quadrature,
            floored_eigenvalues: weight.floored(),
        });
    }
    stage(art, "miracle", start);
    let worst = max(rows.iter().map(|r| r.residual));
    let worst_quad = max(rows.iter().filter_map(|r| r.sigma_quadrature));
    art.records("miracle", &rows)?;
    if !rows.is_empty() {
        art.headline("miracle_max_residual", worst);
        art.headline("sigma_quadrature_max_deviation", worst_quad);
        art.check(Check::below("miracle_residual", worst, MIRACLE_TOL));
        art.check(Check::below("sigma_quadrature_deviation", worst_quad, SIGMA_QUADRATURE_TOL));
    }

    let start = Instant::now();
    let mut rows = Vec::with_capacity(p.factorized_instances);
    for instance in 0..p.factorized_instances {
        let ds = random::dim(&mut rng, 2, p.max_system_dim);
        let de = random::dim(&mut rng, 1, p.max_env_dim);
        let beta = p.betas[instance % p.betas.len()];
        let layout = HilbertLayout::new(ds, de)?;
        let hs = random::unit_hermitian(&mut rng, ds);
        let he = random::unit_hermitian(&mut rng, de);
        let v = random::unit_hermitian(&mut rng, ds * de);
        let xs = random::hermitian(&mut rng, ds);
        let product = CompositeHamiltonian::uncoupled(layout, hs.clone(), he.clone())?;
        let rho = Weight::gibbs(&product.total(), beta)?.density();
        let nc = necessary_condition_residual(xs.matrix(), &rho, layout, beta)?;
        let drift = drift_term_quantum(xs.matrix(), &product, beta)?;
        let coupled = CompositeHamiltonian::new(layout, hs, he, v)?;
        let drift_c = drift_term_quantum(xs.matrix(), &coupled, beta)?;
        art.warnings.eigenvalue_floors += nc.floored_eigenvalues + drift_c.necessary_condition.floored_eigenvalues;
        rows.push(ReducedRow {
            instance,
            d_system: ds,
            d_env: de,
            beta,
            factorized_residual: nc.residual,
            factorized_condition: nc.condition_number,
            drift_difference: drift.difference,
            correlated_residual: drift_c.necessary_condition.residual,
            correlated_drift_difference: drift_c.difference,
        });
    }
    stage(art, "reduced_space", start);
    art.records("reduced_space", &rows)?;
    if !rows.is_empty() {
        let nc = max(rows.iter().map(|r| r.factorized_residual));
        let dd = max(rows.iter().map(|r| r.drift_difference));
        art.headline("necessary_condition_max_residual", nc);
        art.headline("drift_max_difference", dd);
        art.headline("correlated_max_residual", max(rows.iter().map(|r| r.correlated_residual)));
        art.check(Check::below("necessary_condition_factorized", nc, NECESSARY_TOL));
        art.check(Check::below("drift_equals_mean_force_drift", dd, DRIFT_TOL));
    }
    Ok(())
}

fn real_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Validation("matrix rows differ in length".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

#[derive(Serialize)]
struct SweepRow {
    epsilon: f64,
    residual: f64,
    kubo_residual: f64,
    quadrature_agreement: f64,
    max_pair_difference: f64,
}

#[derive(Serialize)]
struct FactorizedRow {
    instance: usize,
    d_system: usize,
    d_env: usize,
    residual: f64,
    quadrature_agreement: f64,
}

pub fn appendix(seed: u64, p: &AppendixProbeParams, art: &mut Artifacts) -> Result<()> {
    let start = Instant::now();
    let state = ClassicalClassicalState::new(real_matrix(&p.probabilities)?)?;
    let x = real_matrix(&p.x_system)?.map(|v| C::new(v, 0.0));
    let product = state.decorrelated();
    let probe = |eps: f64| -> Result<_> { Ok(appendix_probe(&product.mix(&state, eps)?, &x, p.beta)?) };

    let headline = probe(p.mixing)?;
    art.warnings.eigenvalue_floors += headline.floored_probabilities;
    art.headline("residual", headline.residual);
    art.headline("kubo_residual", headline.kubo_residual);
    art.headline("quadrature_agreement", headline.quadrature_agreement);
    art.records("pairs", &headline.pairs)?;
    let mut quadrature = headline.quadrature_agreement;
    art.result("probe", &headline)?;

    let mut eps = p.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut sweep = Vec::with_capacity(eps.len());
    for &e in &eps {
        let r = probe(e)?;
        art.warnings.eigenvalue_floors += r.floored_probabilities;
        quadrature = quadrature.max(r.quadrature_agreement);
        sweep.push(SweepRow {
            epsilon: e,
            residual: r.residual,
            kubo_residual: r.kubo_residual,
            quadrature_agreement: r.quadrature_agreement,
            max_pair_difference: max(r.pairs.iter().map(|q| q.difference.abs())),
        });
    }
    art.records("epsilon_sweep", &sweep)?;
    if !sweep.is_empty() {
        let monotone = sweep.windows(2).all(|w| w[1].residual >= w[0].residual - 1e-14);
        art.headline("sweep_monotone", if monotone { 1.0 } else { 0.0 });
        art.check(Check::at_least("sweep_monotone", if monotone { 1.0 } else { 0.0 }, 1.0));
        if sweep[0].epsilon == 0.0 {
            art.headline("residual_at_zero_mixing", sweep[0].residual);
            art.check(Check::below("residual_at_zero_mixing", sweep[0].residual, FACTORIZED_PROBE_TOL));
        }
    }

    let mut rng = random::stream(seed, 3);
    let mut rows = Vec::with_capacity(p.factorized_instances);
    for instance in 0..p.factorized_instances {
        let ds = random::dim(&mut rng, 2, 4);
        let de = random::dim(&mut rng, 1, 4);
        let state = ClassicalClassicalState::product(&random::probabilities(&mut rng, ds), &random::probabilities(&mut rng, de))?;
        let xs = random::hermitian(&mut rng, ds);
        let r = appendix_probe(&state, xs.matrix(), p.beta)?;
        quadrature = quadrature.max(r.quadrature_agreement);
        rows.push(FactorizedRow {
            instance,
            d_system: ds,
            d_env: de,
            residual: r.residual,
            quadrature_agreement: r.quadrature_agreement,
        });
    }
    art.records("factorized", &rows)?;
    if !rows.is_empty() {
        let worst = max(rows.iter().map(|r| r.residual));
        art.headline("factorized_max_residual", worst);
        art.check(Check::below("factorized_residual", worst, FACTORIZED_PROBE_TOL));
    }
    art.headline("quadrature_max_deviation", quadrature);
    art.check(Check::below("closed_form_matches_quadrature", quadrature, PROBE_QUADRATURE_TOL));
    stage(art, "probe", start);
    Ok(())
}

fn metric_spec(m: Metric, weight: &Weight<f64>, alpha: f64) -> Result<InnerProductSpec<f64>> {
    Ok(match m {
        Metric::HilbertSchmidt => InnerProductSpec::HilbertSchmidt,
        Metric::KuboAveraged => InnerProductSpec::KuboAveraged { weight: weight.clone() },
        Metric::ClassicalWeighted => InnerProductSpec::ClassicalWeighted { weight: weight.clone() },
        Metric::Deformed => InnerProductSpec::deformed(alpha, weight.clone())?,
    })
}

#[derive(Serialize)]
struct SplitRow<'a> {
    time: f64,
    metric: &'a str,
    sigma_min: f64,
    halving_change: f64,
    dissipator_norm: Option<f64>,
    orthogonality: Option<f64>,
    orthogonality_imag: Option<f64>,
    reconstruction: Option<f64>,
}

#[derive(Serialize)]
struct HeffRow<'a> {
    time: f64,
    metric: &'a str,
    i: usize,
    j: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct FluxRow<'a> {
    time: f64,
    metric: &'a str,
    flux: Option<f64>,
    work: Option<f64>,
    distance_to_hmf: Option<f64>,
}

#[derive(Serialize)]
struct MetricSummary {
    metric: String,
    max_orthogonality: f64,
    max_reconstruction: f64,
    commutator_recovery: f64,
    minimality_violations: usize,
    minimality_time: Option<f64>,
    equilibration_distance: f64,
    equilibrated: bool,
    caveat: Option<String>,
}

pub fn tcl_split(seed: u64, p: &TclSplitParams, art: &mut Artifacts) -> Result<()> {
    let mut rng = random::stream(seed, 4);
    let layout = HilbertLayout::new(p.d_system, p.d_env)?;
    let hs = random::hermitian(&mut rng, p.d_system);
    let he = random::hermitian(&mut rng, p.d_env);
    let v = random::hermitian(&mut rng, p.d_system * p.d_env).scaled(p.coupling);
    let rho0 = random::density(&mut rng, p.d_system);
    let composite = CompositeHamiltonian::new(layout, hs.clone(), he.clone(), v)?;
    let rho_e = gibbs_state(&he, p.beta)?;
    let times = uniform_grid(p.t_max, p.n_times);

    let start = Instant::now();
    let series = reduced_map(&composite.total(), &rho_e, layout, &times)?;
    let gens = tcl_generator(&series, &GeneratorConfig::default())?;
    stage(art, "generator", start);
    art.warnings.singular_times += gens.gaps().len();
    art.result("map_diagnostics", &series.diagnostics)?;
    let states = times.iter().map(|&t| series.dynamics.state_at(&rho0, t)).collect::<meanforce_core::Result<Vec<_>>>()?;
    let equilibrium = reduced_gibbs(&composite, p.beta)?;
    let weight = Weight::from_density(&equilibrium);
    let hmf = hamiltonian_of_mean_force(&composite, p.beta)?;
    art.warnings.eigenvalue_floors += weight.floored() + hmf.floored_eigenvalues;

    let start = Instant::now();
    let (mut split_rows, mut heff_rows, mut flux_rows, mut summaries) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let names: Vec<String> = p.metrics.iter().map(|&m| Ok(metric_spec(m, &weight, p.alpha)?.name())).collect::<Result<_>>()?;
    for (&m, name) in p.metrics.iter().zip(&names) {
        let spec = metric_spec(m, &weight, p.alpha)?;
        let metric = SuperoperatorMetric::new(&spec, p.d_system)?;
        let splits: Vec<Option<GeneratorSplit<f64>>> = gens
            .samples
            .iter()
            .map(|s| s.generator.as_ref().map(|k| split_with_metric(k, &metric, name.clone())).transpose())
            .collect::<meanforce_core::Result<_>>()?;
        for (s, split) in gens.samples.iter().zip(&splits) {
            split_rows.push(SplitRow {
                time: s.time,
                metric: name,
                sigma_min: s.sigma_min,
                halving_change: s.halving_change,
                dissipator_norm: split.as_ref().map(|x| x.dissipator_norm),
                orthogonality: split.as_ref().map(|x| x.orthogonality),
                orthogonality_imag: split.as_ref().map(|x| x.orthogonality_imag),
                reconstruction: split.as_ref().map(|x| x.reconstruction),
            });
            if let Some(x) = split {
                let h = x.effective_hamiltonian.matrix();
                for i in 0..p.d_system {
                    for j in 0..p.d_system {
                        heff_rows.push(HeffRow { time: s.time, metric: name, i, j, re: h[(i, j)].re, im: h[(i, j)].im });
                    }
                }
            }
        }
        let heff: Vec<Option<HermitianOperator<f64>>> =
            splits.iter().map(|s| s.as_ref().map(|x| x.effective_hamiltonian.clone())).collect();
        let flux = work_flux(&times, &heff, &states)?;
        let cmp = compare_heff_hmf(name, &times, &heff, &hmf.operator, states.last().expect("non-empty grid"), &equilibrium, p.equilibration_tol)?;
        for k in 0..times.len() {
            flux_rows.push(FluxRow { time: times[k], metric: name, flux: flux.flux[k], work: flux.work[k], distance_to_hmf: cmp.distance[k] });
        }

        // perturbing H_eff at the last defined time never lowers the dissipator norm
        let (mut violations, mut minimality_time) = (0, None);
        if let Some((s, split)) = gens.samples.iter().zip(&splits).rev().find_map(|(s, x)| x.as_ref().map(|x| (s, x))) {
            let k = s.generator.as_ref().expect("split implies generator");
            minimality_time = Some(s.time);
            for _ in 0..p.perturbations {
                let dh = random::hermitian(&mut rng, p.d_system);
                let dh = dh.scaled(p.perturbation_size / dh.matrix().norm());
                let trial = split.effective_hamiltonian.combine(1.0, &dh, 1.0)?;
                let norm = metric.norm(&k.sub(&Superoperator::commutator_generator(trial.matrix())));
                if norm < split.dissipator_norm {
                    violations += 1;
                }
            }
        }
        let pure = split_with_metric(&schrodinger_generator(&hs), &metric, name.clone())?;
        let recovery = (pure.effective_hamiltonian.matrix() - hs.traceless().0.matrix()).norm().max(pure.dissipator_norm);
        let defined = splits.iter().flatten();
        let summary = MetricSummary {
            metric: name.clone(),
            max_orthogonality: max(defined.clone().map(|x| x.orthogonality)),
            max_reconstruction: max(defined.map(|x| x.reconstruction)),
            commutator_recovery: recovery,
            minimality_violations: violations,
            minimality_time,
            equilibration_distance: cmp.equilibration_distance,
            equilibrated: cmp.equilibrated,
            caveat: cmp.caveat.clone(),
        };
        art.headline(&format!("{name}_max_orthogonality"), summary.max_orthogonality);
        art.headline(&format!("{name}_commutator_recovery"), recovery);
        art.check(Check::below(&format!("{name}_orthogonality"), summary.max_orthogonality, ORTHOGONALITY_TOL));
        art.check(Check::below(&format!("{name}_commutator_recovery"), recovery, COMMUTATOR_RECOVERY_TOL));
        art.check(Check::at_most(&format!("{name}_minimality_violations"), violations as f64, 0.0));
        summaries.push(summary);
    }
    art.records("splits", &split_rows)?;
    art.records("effective_hamiltonian", &heff_rows)?;
    art.records("work_flux", &flux_rows)?;
    art.result("metrics", &summaries)?;
    stage(art, "splitting", start);

    if p.uncoupled_reference {
        let start = Instant::now();
        let bare = CompositeHamiltonian::uncoupled(layout, hs.clone(), he)?;
        let series = reduced_map(&bare.total(), &rho_e, layout, &times)?;
        let gens = tcl_generator(&series, &GeneratorConfig::default())?;
        art.warnings.singular_times += gens.gaps().len();
        let exact = schrodinger_generator(&hs);
        let metric = SuperoperatorMetric::new(&InnerProductSpec::HilbertSchmidt, p.d_system)?;
        let (mut k_err, mut d_norm) = (0.0f64, 0.0f64);
        let mut heff = Vec::with_capacity(times.len());
        for s in &gens.samples {
            let Some(k) = &s.generator else {
                heff.push(None);
                continue;
            };
            k_err = k_err.max(k.sub(&exact).frobenius());
            let split = split_with_metric(k, &metric, "hilbert_schmidt".into())?;
            d_norm = d_norm.max(split.dissipator_norm);
            heff.push(Some(split.effective_hamiltonian));
        }
        let states = times.iter().map(|&t| series.dynamics.state_at(&rho0, t)).collect::<meanforce_core::Result<Vec<_>>>()?;
        let flux = work_flux(&times, &heff, &states)?;
        let f_max = max(flux.flux.iter().flatten().map(|f| f.abs()));
        art.headline("uncoupled_generator_error", k_err);
        art.headline("uncoupled_dissipator_norm", d_norm);
        art.headline("uncoupled_max_work_flux", f_max);
        art.check(Check::below("uncoupled_generator_is_commutator", k_err, UNCOUPLED_GENERATOR_TOL));
        art.check(Check::below("uncoupled_dissipator_vanishes", d_norm, UNCOUPLED_GENERATOR_TOL));
        art.check(Check::below("uncoupled_work_flux_vanishes", f_max, UNCOUPLED_FLUX_TOL));
        stage(art, "uncoupled_reference", start);
    }
    Ok(())
}

#[derive(Serialize)]
struct DecompositionRow {
    instance: usize,
    dissipative: bool,
    time: f64,
    heisenberg_residual: f64,
    schrodinger_residual: f64,
    adjoint_consistency: f64,
    idempotence_defect: f64,
}

pub fn decomposition(seed: u64, p: &DecompositionParams, art: &mut Artifacts) -> Result<()> {
    let start = Instant::now();
    let mut rng = random::stream(seed, 5);
    let layout = HilbertLayout::new(p.d_system, p.d_env)?;
    let d = layout.dim();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for instance in 0..p.instances {
        let h = random::hermitian(&mut rng, d);
        let dissipative = p.dissipative && instance % 2 == 1;
        let mut l = heisenberg_generator(&h);
        if dissipative {
            let jump: CMatrix<f64> = random::ginibre(&mut rng, d) * C::new(0.5, 0.0);
            l = l.add(&lindblad_dissipator(&jump));
        }
        let weight = Weight::gibbs(&h, p.beta)?;
        art.warnings.eigenvalue_floors += weight.floored();
        let projector = GrabertProjector::new(weight, layout)?.superoperator()?;
        let rep = verify_propagator_decomposition(&l, &projector, p.horizon, p.checkpoints, &DecompositionConfig::default())?;
        worst = worst.max(rep.max_residual);
        for cp in &rep.checkpoints {
            rows.push(DecompositionRow {
                instance,
                dissipative,
                time: cp.time,
                heisenberg_residual: cp.heisenberg_residual,
                schrodinger_residual: cp.schrodinger_residual,
                adjoint_consistency: cp.adjoint_consistency,
                idempotence_defect: rep.idempotence_defect,
            });
        }
    }
    art.records("checkpoints", &rows)?;
    art.headline("max_residual", worst);
    art.check(Check::below("decomposition_residual", worst, DECOMPOSITION_TOL));
    stage(art, "decomposition", start);
    Ok(())
}
