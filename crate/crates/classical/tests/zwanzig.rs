mod common;

use common::*;
use meanforce_classical::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MILLION: usize = 1_000_000;

fn fraction_within(field: &BinnedField, mask: &[bool], expected: impl Fn(&[f64]) -> f64) -> (usize, usize) {
    let (mut ok, mut total) = (0, 0);
    for b in (0..field.n_bins()).filter(|&b| mask[b]) {
        let (Some(v), Some(e)) = (field.value(b, 0), field.error(b, 0)) else { continue };
        total += 1;
        if (v - expected(&field.grid.centre(b))).abs() <= 3.0 * e {
            ok += 1;
        }
    }
    (ok, total)
}

#[test]
fn projection_of_constant_and_relevant_functions() {
    let s = sample(&harmonic_pair(0.5), 1.0, 100_000, 301);
    let (grid, rel) = covering_grid(&s, 32);
    let one = zwanzig_project(&Polynomial::constant(4, 1.0), &s, &grid, &rel).unwrap();
    for b in 0..grid.n_bins() {
        match one.field.value(b, 0) {
            Some(v) => assert_eq!(v, 1.0),
            None => assert_eq!(one.field.counts[b], 0),
        }
    }
    // B = f(A): 𝒫B = f(centre) + O(width²)
    let f = Polynomial::new(4, vec![(1.0, vec![2, 0, 0, 0]), (0.5, vec![0, 0, 1, 0])]).unwrap();
    let pf = zwanzig_project(&f, &s, &grid, &rel).unwrap();
    let w = grid.axes()[0].width().max(grid.axes()[1].width());
    for b in (0..grid.n_bins()).filter(|&b| pf.field.counts[b] > 0) {
        let c = grid.centre(b);
        let exact = c[0] * c[0] + 0.5 * c[1];
        // within a bin q² moves by at most |q|w + w²/4 and 0.5 p by w/4
        let bound = c[0].abs() * w + w * w / 4.0 + w / 4.0;
        assert!((pf.field.value(b, 0).unwrap() - exact).abs() <= bound, "bin {b}");
    }
}

#[test]
fn conditional_mean_of_environment_coordinate() {
    let s = sample(&harmonic_pair(0.5), 1.0, MILLION, 302);
    let (grid, rel) = covering_grid(&s, DEFAULT_BINS_PER_AXIS);
    let p = zwanzig_project(&Coordinate(1), &s, &grid, &rel).unwrap();
    let mask = interior_mask(&grid, &p.field.counts, DEFAULT_MIN_COUNT);
    // ⟨q_E | q_S⟩ = -(c/k) q_S, averaged over the bin
    let (ok, total) = fraction_within(&p.field, &mask, |a| -0.5 * a[0]);
    assert!(total > 500 && ok as f64 >= 0.95 * total as f64, "{ok}/{total}");
}

#[test]
fn projection_is_idempotent() {
    let sys = quartic_pair();
    let s = sample(&sys, 1.0, 100_000, 303);
    let (grid, rel) = covering_grid(&s, 32);
    let b = Polynomial::new(4, vec![(1.0, vec![1, 0, 2, 1]), (-0.7, vec![0, 3, 0, 0])]).unwrap();
    let once = zwanzig_project(&b, &s, &grid, &rel).unwrap();
    let twice = zwanzig_project(&once.as_observable(&rel), &s, &grid, &rel).unwrap();
    for bin in 0..grid.n_bins() {
        assert_eq!(once.field.value(bin, 0), twice.field.value(bin, 0));
    }
}

#[test]
fn conditional_drift_examples() {
    let sys = harmonic_pair(0.5);
    let s = sample(&sys, 1.0, MILLION, 304);
    let rel = RelevantSet::for_samples(&s);
    // a bin centred on (q_S, p_S) = (1, 0)
    let grid = BinGrid::new(vec![
        Axis { label: "q0".into(), min: 1.0 - 6.5 * 0.2, max: 1.0 + 25.5 * 0.2, bins: 32 },
        Axis { label: "p0".into(), min: -3.2, max: 3.2, bins: 32 },
    ])
    .unwrap();
    let mut grid_full = grid.clone();
    let axes = vec![
        Axis { label: "q0".into(), min: -6.1, max: 6.1, bins: 61 },
        Axis { label: "p0".into(), min: -6.1, max: 6.1, bins: 61 },
    ];
    grid_full = BinGrid::new(axes).unwrap_or(grid_full);
    let drift = conditional_drift(&s, &grid_full, &rel, &sys).unwrap();
    let bin = grid_full.bin_of(&[1.0, 0.0]).unwrap();
    assert_eq!(grid_full.centre(bin), vec![1.0, 0.0]);
    let (v, e) = (drift.vector(bin).unwrap(), drift.vector_error(bin).unwrap());
    // the cell average of p vanishes by symmetry; ⟨-q_S - c q_E | q_S⟩ = -0.75 q_S is linear
    assert!(v[0].abs() < 3.0 * e[0], "{v:?} ± {e:?}");
    assert!((v[1] + 0.75).abs() < 3.0 * e[1], "{v:?} ± {e:?}");
    let _ = grid;
}

#[test]
fn momentum_component_is_exact_per_sample() {
    let sys = quartic_pair();
    let s = sample(&sys, 1.0, 10_000, 305);
    let rel = RelevantSet::for_samples(&s);
    for x in s.points() {
        let d = liouvillian_drift(&rel.observables(), &sys, x).unwrap();
        assert_eq!(d[0], x[2] / sys.params().masses[0]);
    }
}

#[test]
fn uncoupled_conditional_drift_is_bare() {
    let sys = harmonic_pair(0.0);
    let s = sample(&sys, 1.0, 200_000, 306);
    let (grid, rel) = covering_grid(&s, 32);
    let drift = conditional_drift(&s, &grid, &rel, &sys).unwrap();
    let oracle = gaussian_as_separable(&gaussian_hmf_oracle(&sys, 1.0).unwrap()).unwrap();
    let exact = oracle.drift_field(&grid, drift.counts.clone()).unwrap();
    let mask = interior_mask(&grid, &drift.counts, DEFAULT_MIN_COUNT);
    let cmp = compare_fields(("conditional", &drift), ("bare", &exact), &mask, DEFAULT_MIN_COUNT).unwrap();
    assert!(cmp.passes(0.95), "{}", cmp.acceptance_fraction);
}

#[test]
fn drift_from_closed_form_fields() {
    let grid = BinGrid::symmetric(&["q0", "p0"], &[3.2, 3.2], 32).unwrap();
    let counts = vec![100; grid.n_bins()];
    let quad = BinnedField::from_fn(grid.clone(), vec!["hmf".into()], counts.clone(), |a| {
        vec![0.5 * a[1] * a[1] + 0.5 * 0.75 * a[0] * a[0]]
    })
    .unwrap();
    let d = drift_from_hmf(&quad).unwrap();
    let b = grid.bin_of(&[1.05, 0.05]).unwrap();
    let c = grid.centre(b);
    let v = d.field.vector(b).unwrap();
    assert!((v[0] - c[1]).abs() < 1e-12 && (v[1] + 0.75 * c[0]).abs() < 1e-12);
    let flat = BinnedField::from_fn(grid.clone(), vec!["hmf".into()], counts, |_| vec![2.0]).unwrap();
    let d = drift_from_hmf(&flat).unwrap();
    assert!((0..grid.n_bins()).all(|b| d.field.vector(b).unwrap() == vec![0.0, 0.0]));
}

#[test]
fn drift_residuals_harmonic_pair() {
    let sys = harmonic_pair(0.5);
    let s = sample(&sys, 1.0, MILLION, 307);
    let (grid, rel) = covering_grid(&s, DEFAULT_BINS_PER_AXIS);
    let report = drift_residual_report(&s, &sys, &grid, &rel, DEFAULT_MIN_COUNT).unwrap();
    assert!(report.residual.compared_bins > 500);
    assert!(report.residual.passes(0.95), "{}", report.residual.acceptance_fraction);
    assert!((report.residual.reduced_chi2() - 1.0).abs() < 0.3);
}

#[test]
fn drift_residuals_quartic_pair_and_oracle() {
    let sys = quartic_pair();
    let s = sample(&sys, 1.0, MILLION, 308);
    let (grid, rel) = covering_grid(&s, DEFAULT_BINS_PER_AXIS);
    let report = drift_residual_report(&s, &sys, &grid, &rel, DEFAULT_MIN_COUNT).unwrap();
    assert!(report.residual.passes(0.95), "{}", report.residual.acceptance_fraction);
    let oracle = quartic_hmf_quadrature(&sys, 1.0, QuadratureConfig::default()).unwrap();
    let exact = oracle.drift_field(&grid, report.conditional.counts.clone()).unwrap();
    let mask = interior_mask(&grid, &report.hmf.field.counts, DEFAULT_MIN_COUNT);
    let cmp = compare_fields(("conditional", &report.conditional), ("quadrature", &exact), &mask, DEFAULT_MIN_COUNT)
        .unwrap();
    assert!(cmp.passes(0.95), "{}", cmp.acceptance_fraction);
}

#[test]
fn drift_residuals_uncoupled() {
    let sys = harmonic_pair(0.0);
    let s = sample(&sys, 1.0, 400_000, 309);
    let (grid, rel) = covering_grid(&s, 48);
    let report = drift_residual_report(&s, &sys, &grid, &rel, DEFAULT_MIN_COUNT).unwrap();
    assert!(report.residual.passes(0.95));
}

#[test]
fn residual_report_serializes() {
    let sys = harmonic_pair(0.5);
    let s = sample(&sys, 1.0, 50_000, 310);
    let (grid, rel) = covering_grid(&s, 16);
    let report = drift_residual_report(&s, &sys, &grid, &rel, DEFAULT_MIN_COUNT).unwrap();
    let json = serde_json::to_value(&report.residual).unwrap();
    assert!(json["acceptance_fraction"].is_number());
    assert!(json["chi2"].is_number());
    assert!(json["bins"].as_array().unwrap().len() == report.residual.compared_bins);
    let mut buf = Vec::new();
    report.residual.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("centre_q0,centre_p0,count,left_q0,left_err_q0,"));
    assert_eq!(text.lines().count(), report.residual.compared_bins + 1);
}

#[test]
fn equilibrium_density_transport_vanishes() {
    let sys = quartic_pair();
    let s = sample(&sys, 1.0, MILLION, 311);
    let (grid, rel) = covering_grid(&s, 48);
    let hmf = estimate_hmf(&s, &grid, &rel).unwrap();
    let p = density(&s, &grid, &rel).unwrap();
    let transport = relevant_density_drift(&p, &hmf.field).unwrap();
    let mask = interior_mask(&grid, &hmf.field.counts, DEFAULT_MIN_COUNT);
    let (ok, total) = fraction_within(&transport.field, &mask, |_| 0.0);
    assert!(total > 300 && ok as f64 >= 0.95 * total as f64, "{ok}/{total}");
}

#[test]
fn uniform_density_has_no_transport() {
    let grid = BinGrid::symmetric(&["q0", "p0"], &[2.0, 2.0], 16).unwrap();
    let counts = vec![10; grid.n_bins()];
    let p = BinnedField::from_fn(grid.clone(), vec!["density".into()], counts.clone(), |_| vec![1.0 / 16.0]).unwrap();
    let h = BinnedField::from_fn(grid.clone(), vec!["hmf".into()], counts, |a| vec![a[0] * a[0] + a[1] * a[1]]).unwrap();
    let t = relevant_density_drift(&p, &h).unwrap();
    assert!((0..grid.n_bins()).all(|b| t.field.value(b, 0) == Some(0.0)));
    let other = BinGrid::symmetric(&["q0", "p0"], &[2.0, 2.0], 8).unwrap();
    let q = BinnedField::from_fn(other.clone(), vec!["density".into()], vec![1; 64], |_| vec![1.0]).unwrap();
    assert!(matches!(relevant_density_drift(&q, &h), Err(Error::GridMismatch(_))));
}

#[test]
fn displaced_uncoupled_density_follows_liouville_transport() {
    // with no coupling H* = H_S and ∂p/∂t = {H_S, p} exactly
    let sys = harmonic_pair(0.0);
    let s = sample(&sys, 1.0, MILLION, 312).displaced(&[1.0, 0.5]).unwrap();
    let rel = RelevantSet::for_samples(&s);
    let grid = BinGrid::symmetric(&["q0", "p0"], &[6.5, 6.5], 48).unwrap();
    let dt = 0.05;
    let series = estimate_p_alpha_t(&s, &sys, &grid, &rel, &[0.0, dt, 2.0 * dt], DEFAULT_DT, Integrator::default()).unwrap();
    let rate = density_rate(&series, 0, 2).unwrap();
    let hs = BinnedField::from_fn(grid.clone(), vec!["hmf".into()], series.fields[1].counts.clone(), |a| {
        vec![0.5 * a[0] * a[0] + 0.5 * a[1] * a[1]]
    })
    .unwrap();
    let transport = relevant_density_drift(&series.fields[1], &hs).unwrap();
    let mask = interior_mask(&grid, &series.fields[1].counts, 100);
    let cmp = compare_fields(("rate", &rate), ("transport", &transport.field), &mask, 100).unwrap();
    assert!(cmp.compared_bins > 200);
    assert!(cmp.passes(0.95), "{}", cmp.acceptance_fraction);
}

#[test]
fn mori_fixed_point_and_gaussian_equality() {
    let sys = harmonic_pair(0.5);
    let s = sample(&sys, 1.0, 400_000, 313);
    let (grid, rel) = covering_grid(&s, 48);
    let phi = Coordinate(0);
    let m = mori_project(&phi, &phi, &s).unwrap();
    assert!((m.coefficient - m.phi_norm).abs() < 1e-12);
    let cmp = norm_compare(&phi, &s, &grid, &rel, &phi, true).unwrap();
    assert!((cmp.zwanzig - cmp.mori).abs() < 1e-12, "{cmp:?}");
    // 𝒫^Z q_E = -½ q_S is linear in φ = q_S, so both projections agree
    let cmp = norm_compare(&Coordinate(1), &s, &grid, &rel, &phi, true).unwrap();
    assert!(cmp.noise_bias > 0.0);
    assert!((cmp.difference - cmp.noise_bias).abs() < 3.0 * cmp.sigma, "{cmp:?}");
    assert!(cmp.holds(3.0));
    assert!(matches!(mori_project(&phi, &Polynomial::constant(4, 0.0), &s), Err(Error::InvalidArgument(_))));
}

#[test]
fn zwanzig_norm_is_strictly_larger_for_quartic_coupling() {
    let sys = CoupledOscillators::quartic_pair(1.0, 1.0, 0.5, 0.5).unwrap();
    let s = sample(&sys, 1.0, 400_000, 314);
    let (grid, rel) = covering_grid(&s, 48);
    // ⟨q_E² | q_S⟩ depends on q_S², outside span{q_S}
    let b = Polynomial::new(4, vec![(1.0, vec![0, 2, 0, 0]), (1.0, vec![1, 1, 0, 0])]).unwrap();
    let phi = Polynomial::new(4, vec![(1.0, vec![1, 0, 0, 0])]).unwrap();
    let cmp = norm_compare(&b, &s, &grid, &rel, &phi, true).unwrap();
    assert!(cmp.strict(3.0), "{cmp:?}");
}

fn random_polynomial(rng: &mut ChaCha8Rng) -> Polynomial {
    let terms = (0..rng.random_range(1..=4))
        .map(|_| {
            let c: f64 = rng.random_range(-1.0..1.0);
            let e = (0..4).map(|_| rng.random_range(0..=2)).collect();
            (c, e)
        })
        .collect();
    Polynomial::new(4, terms).unwrap()
}

#[test]
fn zwanzig_maximizes_the_norm_for_random_observables() {
    let sys = quartic_pair();
    let s = sample(&sys, 1.0, 200_000, 315);
    let (grid, rel) = covering_grid(&s, 32);
    let phi = Polynomial::new(4, vec![(1.0, vec![1, 0, 0, 0]), (0.3, vec![0, 0, 1, 0])]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(316);
    for _ in 0..25 {
        let b = random_polynomial(&mut rng);
        let cmp = norm_compare(&b, &s, &grid, &rel, &phi, true).unwrap();
        assert!(cmp.holds(3.0), "{cmp:?}");
        // binning φ puts it in the range of 𝒫^Z, where Cauchy-Schwarz is exact
        assert!(cmp.difference >= -1e-12);
    }
}

#[test]
fn pythagoras_and_orthogonality() {
    let s = sample(&quartic_pair(), 1.0, 100_000, 317);
    let (grid, rel) = covering_grid(&s, 32);
    let b = Polynomial::new(4, vec![(1.0, vec![1, 1, 0, 0]), (2.0, vec![0, 2, 0, 1]), (0.5, vec![0, 0, 0, 0])]).unwrap();
    let p = pythagoras(&b, &s, &grid, &rel).unwrap();
    assert!(p.defect.abs() < 1e-10 * p.total);
    assert!(p.cross.abs() < 1e-10 * p.total);
    assert!(p.total >= p.projected);
}

#[test]
fn adjoint_projector_identities() {
    let sys = harmonic_pair(0.5);
    let rho = sample(&sys, 1.0, 200_000, 318);
    let mu = sample(&sys, 1.0, 100_000, 319).displaced(&[0.4, -0.2]).unwrap();
    let grid = BinGrid::symmetric(&["q0", "p0"], &[6.5, 6.5], 32).unwrap();
    let rel = RelevantSet::for_samples(&rho);
    let x = Polynomial::new(4, vec![(1.0, vec![1, 1, 0, 0]), (0.5, vec![0, 0, 1, 0]), (1.0, vec![0, 0, 0, 0])]).unwrap();
    let check = adjoint_consistency(&x, &mu, &rho, &grid, &rel).unwrap();
    assert!((check.mu_side - check.rho_side).abs() < 3.0 * check.sigma, "{check:?}");
    // 𝒫†(ϱX) = ϱ 𝒫X on the bins
    let lhs = adjoint_of_weighted(&x, &rho, &grid, &rel).unwrap();
    let rhs = zwanzig_project(&x, &rho, &grid, &rel).unwrap();
    for b in 0..grid.n_bins() {
        match (lhs.value(b, 0), rhs.field.value(b, 0)) {
            (Some(l), Some(r)) => assert!((l - r).abs() <= 1e-12 * r.abs().max(1.0)),
            (None, None) => {}
            other => panic!("bin {b}: {other:?}"),
        }
    }
}
