mod common;

use common::*;
use meanforce_core::grabert::reduced_gibbs;
use meanforce_core::linalg::{self, expm};
use meanforce_core::tcl::{
    gell_mann_basis, lindblad_dissipator, propagate_with_generator, uniform_grid, SuperoperatorMetric,
};
use meanforce_core::*;

fn c(x: f64) -> C<f64> {
    C::new(x, 0.0)
}

fn env_gibbs(he: &HermitianOperator<f64>, beta: f64) -> DensityMatrix<f64> {
    gibbs_state(he, beta).unwrap()
}

fn coupled(seed: u64, de: usize, g: f64) -> (CompositeHamiltonian<f64>, DensityMatrix<f64>) {
    let mut r = rng(seed);
    let layout = HilbertLayout::new(2, de).unwrap();
    let he = random_hermitian(&mut r, de);
    let h = CompositeHamiltonian::new(
        layout,
        random_hermitian(&mut r, 2),
        he.clone(),
        random_hermitian(&mut r, 2 * de).scaled(g),
    )
    .unwrap();
    (h, env_gibbs(&he, 1.0))
}

#[test]
fn reduced_map_uncoupled_is_unitary_conjugation() {
    let mut r = rng(21);
    let layout = HilbertLayout::new(2, 2).unwrap();
    let hs = random_hermitian(&mut r, 2);
    let he = random_hermitian(&mut r, 2);
    let h = CompositeHamiltonian::uncoupled(layout, hs.clone(), he.clone()).unwrap();
    let times = uniform_grid(2.0, 8);
    let series = reduced_map(&h.total(), &env_gibbs(&he, 0.5), layout, &times).unwrap();
    assert!(max_abs(&(series.maps[0].matrix() - Superoperator::<f64>::identity(2).matrix())) < 1e-14);
    for (&t, v) in times.iter().zip(&series.maps) {
        let u = expm(&(hs.matrix() * C::new(0.0, -t)));
        let exact = Superoperator::sandwich(&u, &u.adjoint());
        assert!(max_abs(&(v.matrix() - exact.matrix())) < 1e-12);
    }
    for d in &series.diagnostics {
        assert!(d.trace_defect < 1e-8 && d.hermiticity_defect < 1e-8);
    }
}

#[test]
fn reduced_map_is_completely_positive() {
    let (h, rho_e) = coupled(22, 4, 0.8);
    let series = reduced_map(&h.total(), &rho_e, h.layout, &uniform_grid(3.0, 6)).unwrap();
    for v in &series.maps {
        let choi = linalg::hermitian_part(&v.choi());
        let min = linalg::eigh(&choi).min();
        assert!(min >= -1e-8, "choi eigenvalue {min}");
    }
}

#[test]
fn reduced_map_rejects_oversized_composites() {
    let layout = HilbertLayout::new(2, 40).unwrap();
    let h = HermitianOperator::<f64>::zeros(80);
    let rho_e = DensityMatrix::maximally_mixed(40);
    assert!(matches!(reduced_map(&h, &rho_e, layout, &[0.0]), Err(Error::DimensionBudget(80, 64))));
}

#[test]
fn generator_uncoupled_is_commutator() {
    let mut r = rng(23);
    let layout = HilbertLayout::new(2, 3).unwrap();
    let hs = random_hermitian(&mut r, 2);
    let he = random_hermitian(&mut r, 3);
    let h = CompositeHamiltonian::uncoupled(layout, hs.clone(), he.clone()).unwrap();
    let series = reduced_map(&h.total(), &env_gibbs(&he, 1.0), layout, &uniform_grid(2.0, 10)).unwrap();
    let gens = tcl_generator(&series, &GeneratorConfig::default()).unwrap();
    let exact = Superoperator::commutator_generator(hs.matrix());
    assert!(gens.gaps().is_empty());
    for s in &gens.samples {
        let k = s.generator.as_ref().unwrap();
        assert!(max_abs(&(k.matrix() - exact.matrix())) < 1e-8);
    }
}

#[test]
fn generator_at_zero_matches_first_derivative() {
    let (h, rho_e) = coupled(24, 2, 1.0);
    let dynamics = ReducedDynamics::new(&h.total(), &rho_e, h.layout).unwrap();
    let k0 = dynamics.generator_at(0.0, &GeneratorConfig::default()).unwrap();
    let k0 = k0.generator.unwrap();
    // independent oracle: -i Tr_E [H, X ⊗ ϱ_E] assembled explicitly
    let hm = h.total();
    let oracle = Superoperator::from_map(2, |x| {
        let full = linalg::kron(x, rho_e.matrix());
        h.layout.partial_trace_env(&linalg::commutator(hm.matrix(), &full)).unwrap() * C::new(0.0, -1.0)
    });
    assert!(max_abs(&(k0.matrix() - oracle.matrix())) < 1e-9);
    assert!(max_abs(&(dynamics.initial_generator().matrix() - oracle.matrix())) < 1e-14);
}

#[test]
fn central_difference_is_second_order() {
    let (h, rho_e) = coupled(25, 2, 1.0);
    let dynamics = ReducedDynamics::new(&h.total(), &rho_e, h.layout).unwrap();
    let t = 0.7;
    let hm = h.total();
    let u = expm(&(hm.matrix() * C::new(0.0, -t)));
    let exact = Superoperator::from_map(2, |x| {
        let full = &u * linalg::kron(x, rho_e.matrix()) * u.adjoint();
        h.layout.partial_trace_env(&linalg::commutator(hm.matrix(), &full)).unwrap() * C::new(0.0, -1.0)
    });
    let e1 = (dynamics.central_difference(t, 0.02) - exact.matrix()).norm();
    let e2 = (dynamics.central_difference(t, 0.01) - exact.matrix()).norm();
    let ratio = e1 / e2;
    assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn reconstructed_generator_reproduces_reduced_evolution() {
    let (h, rho_e) = coupled(26, 2, 0.3);
    let dynamics = ReducedDynamics::new(&h.total(), &rho_e, h.layout).unwrap();
    let rho0 = random_density(&mut rng(99), 2);
    let times = uniform_grid(1.5, 30);
    let cfg = GeneratorConfig::default();
    let traj = propagate_with_generator(rho0.matrix(), &times, 2, |t| {
        dynamics.generator_at(t, &cfg)?.generator.ok_or(Error::SingularMap { time: t, sigma_min: 0.0 })
    })
    .unwrap();
    for (&t, rho) in times.iter().zip(&traj) {
        let exact = dynamics.state_at(&rho0, t).unwrap();
        assert!(max_abs(&(rho - exact.matrix())) < 1e-4);
    }
}

#[test]
fn generator_gap_at_singular_map() {
    // resonant exchange drives the reduced map through a singular point
    let layout = HilbertLayout::new(2, 2).unwrap();
    let sp = CMatrix::<f64>::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(1.0) } else { c(0.0) });
    let swap = linalg::kron(&sp, &sp.adjoint()) + linalg::kron(&sp.adjoint(), &sp);
    let h = HermitianOperator::new(swap).unwrap();
    let rho_e = DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(0.0)]))).unwrap();
    let quarter = std::f64::consts::FRAC_PI_2;
    let dynamics = ReducedDynamics::new(&h, &rho_e, layout).unwrap();
    let sample = dynamics.generator_at(quarter, &GeneratorConfig::default()).unwrap();
    assert!(sample.generator.is_none());
    assert!(sample.sigma_min < 1e-8);
}

#[test]
fn split_pure_commutator_recovers_hamiltonian() {
    let mut r = rng(27);
    let h = random_hermitian(&mut r, 3);
    let k = Superoperator::commutator_generator(h.matrix());
    let rho = random_density(&mut r, 3);
    let w = Weight::from_density(&rho);
    for spec in [
        InnerProductSpec::HilbertSchmidt,
        InnerProductSpec::KuboAveraged { weight: w.clone() },
        InnerProductSpec::deformed(0.25, w.clone()).unwrap(),
        InnerProductSpec::ClassicalWeighted { weight: w },
    ] {
        let split = split_minimal_dissipation(&k, &spec).unwrap();
        let (h0, _) = h.traceless();
        assert!(max_abs(&(split.effective_hamiltonian.matrix() - h0.matrix())) < 1e-10, "{}", split.spec);
        assert!(split.dissipator_norm < 1e-10);
        assert!(split.effective_hamiltonian.trace().abs() < 1e-12);
    }
}

#[test]
fn split_pure_dephasing_has_no_hamiltonian() {
    let k = lindblad_dissipator(&sigma_z()).scale(c(2.0));
    let split = split_minimal_dissipation(&k, &InnerProductSpec::HilbertSchmidt).unwrap();
    assert!(max_abs(split.effective_hamiltonian.matrix()) < 1e-10);

    // brute-force grid over candidate Hamiltonians a·σ_x + b·σ_y + c·σ_z
    let basis = [sigma_x(), meanforce_core::operator::pauli::y(), sigma_z()];
    let mut best = (f64::INFINITY, [0.0; 3]);
    let steps: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.1).collect();
    for &a in &steps {
        for &b in &steps {
            for &cc in &steps {
                let hm = &basis[0] * c(a) + &basis[1] * c(b) + &basis[2] * c(cc);
                let res = k.sub(&Superoperator::commutator_generator(&hm)).frobenius();
                if res < best.0 {
                    best = (res, [a, b, cc]);
                }
            }
        }
    }
    assert!(best.1.iter().all(|v| v.abs() < 1e-12));
    assert!((best.0 - split.dissipator_norm).abs() < 1e-12);
}

#[test]
fn split_superposition_recovers_sigma_x() {
    let k = Superoperator::commutator_generator(&sigma_x()).add(&lindblad_dissipator(&sigma_z()).scale(c(2.0)));
    let split = split_minimal_dissipation(&k, &InnerProductSpec::HilbertSchmidt).unwrap();
    assert!(max_abs(&(split.effective_hamiltonian.matrix() - sigma_x())) < 1e-10);
    assert!(split.orthogonality < 1e-10);
    assert!(split.reconstruction < 1e-12);
}

#[test]
fn split_orthogonality_and_minimality_for_weighted_metrics() {
    let (h, rho_e) = coupled(28, 3, 0.9);
    let dynamics = ReducedDynamics::new(&h.total(), &rho_e, h.layout).unwrap();
    let k = dynamics.generator_at(0.8, &GeneratorConfig::default()).unwrap().generator.unwrap();
    let weight = Weight::from_density(&reduced_gibbs(&h, 1.0).unwrap());
    let mut r = rng(29);
    for spec in [InnerProductSpec::HilbertSchmidt, InnerProductSpec::KuboAveraged { weight }] {
        let metric = SuperoperatorMetric::new(&spec, 2).unwrap();
        let split = split_minimal_dissipation(&k, &spec).unwrap();
        assert!(split.orthogonality < 1e-8);
        for g in gell_mann_basis::<f64>(2) {
            let z = metric.inner(&Superoperator::commutator_generator(&g), &split.dissipator);
            assert!(z.re.abs() < 1e-8);
        }
        for _ in 0..20 {
            let dh = random_hermitian(&mut r, 2);
            let dh = dh.scaled(1e-3 / dh.matrix().norm());
            let trial = split.effective_hamiltonian.combine(1.0, &dh, 1.0).unwrap();
            let norm = metric.norm(&k.sub(&Superoperator::commutator_generator(trial.matrix())));
            assert!(norm >= split.dissipator_norm, "{} < {}", norm, split.dissipator_norm);
        }
    }
}

#[test]
fn gell_mann_basis_is_orthonormal() {
    for d in 2..5 {
        let basis = gell_mann_basis::<f64>(d);
        assert_eq!(basis.len(), d * d - 1);
        for (a, ga) in basis.iter().enumerate() {
            assert!(linalg::trace(ga).norm() < 1e-15);
            for (b, gb) in basis.iter().enumerate() {
                let v = (ga * gb).trace();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((v - c(target)).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn work_flux_uncoupled_and_constant() {
    let mut r = rng(30);
    let layout = HilbertLayout::new(2, 2).unwrap();
    let hs = random_hermitian(&mut r, 2);
    let he = random_hermitian(&mut r, 2);
    let h = CompositeHamiltonian::uncoupled(layout, hs.clone(), he.clone()).unwrap();
    let rho_e = env_gibbs(&he, 1.0);
    let times = uniform_grid(2.0, 20);
    let series = reduced_map(&h.total(), &rho_e, layout, &times).unwrap();
    let gens = tcl_generator(&series, &GeneratorConfig::default()).unwrap();
    let heff: Vec<_> = gens
        .samples
        .iter()
        .map(|s| {
            s.generator
                .as_ref()
                .map(|k| split_minimal_dissipation(k, &InnerProductSpec::HilbertSchmidt).unwrap().effective_hamiltonian)
        })
        .collect();
    let rho0 = random_density(&mut r, 2);
    let states: Vec<_> = times.iter().map(|&t| series.dynamics.state_at(&rho0, t).unwrap()).collect();
    let wf = work_flux(&times, &heff, &states).unwrap();
    assert!(wf.flux.iter().all(|f| f.unwrap().abs() < 1e-7));
    assert!(wf.work.iter().all(|w| w.unwrap().abs() < 1e-7));

    let constant: Vec<_> = times.iter().map(|_| Some(hs.clone())).collect();
    let wf = work_flux(&times, &constant, &states).unwrap();
    assert!(wf.flux.iter().all(|f| f.unwrap().abs() < 1e-13));

    let hmf = hamiltonian_of_mean_force(&h, 1.0).unwrap();
    let cmp = compare_heff_hmf("hs", &times, &heff, &hmf.operator, &states[0], &states[0], 1e-6).unwrap();
    assert!(cmp.distance.iter().all(|d| d.unwrap() < 1e-7));
}

#[test]
fn work_flux_gap_propagates() {
    let times = uniform_grid(1.0, 6);
    let h = HermitianOperator::<f64>::diagonal(&[0.0, 1.0]);
    let mut heff: Vec<_> = times.iter().map(|&t| Some(h.scaled(1.0 + t))).collect();
    heff[3] = None;
    let states: Vec<_> = times.iter().map(|_| DensityMatrix::maximally_mixed(2)).collect();
    let wf = work_flux(&times, &heff, &states).unwrap();
    assert!(wf.flux[2].is_none() && wf.flux[4].is_none());
    assert!((wf.flux[0].unwrap() - 0.5).abs() < 1e-12);
    assert!(wf.work[1].is_some());
    assert!(wf.work[2..].iter().all(|w| w.is_none()));
    assert!(work_flux(&[0.0, 0.1, 0.3], &heff[..3], &states[..3]).is_err());
}

#[test]
fn compare_heff_hmf_is_gauge_invariant() {
    let (h, rho_e) = coupled(31, 2, 0.4);
    let hmf = hamiltonian_of_mean_force(&h, 1.0).unwrap();
    let shifted = hamiltonian_of_mean_force(&h.shifted(3.0), 1.0).unwrap();
    let times = uniform_grid(1.0, 4);
    let series = reduced_map(&h.total(), &rho_e, h.layout, &times).unwrap();
    let series_shifted = reduced_map(&h.shifted(3.0).total(), &rho_e, h.layout, &times).unwrap();
    let cfg = GeneratorConfig::default();
    let heff = |s: &DynamicalMapSeries<f64>| -> Vec<_> {
        tcl_generator(s, &cfg)
            .unwrap()
            .samples
            .iter()
            .map(|x| {
                x.generator
                    .as_ref()
                    .map(|k| split_minimal_dissipation(k, &InnerProductSpec::HilbertSchmidt).unwrap().effective_hamiltonian)
            })
            .collect()
    };
    let rho0 = DensityMatrix::maximally_mixed(2);
    let eq = reduced_gibbs(&h, 1.0).unwrap();
    let a = compare_heff_hmf("hs", &times, &heff(&series), &hmf.operator, &rho0, &eq, 1e-3).unwrap();
    let b = compare_heff_hmf("hs", &times, &heff(&series_shifted), &shifted.operator, &rho0, &eq, 1e-3).unwrap();
    for (x, y) in a.distance.iter().zip(&b.distance) {
        assert!((x.unwrap() - y.unwrap()).abs() < 1e-7);
    }
    assert!(a.caveat.is_some() || a.equilibrated);
}
