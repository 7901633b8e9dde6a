mod common;

use common::*;
use meanforce_core::appendix::ClassicalClassicalState;
use meanforce_core::inner_product::sigma_transform_quadrature;
use meanforce_core::linalg;
use meanforce_core::*;
use proptest::prelude::*;
use rand::Rng;

fn c(x: f64) -> C<f64> {
    C::new(x, 0.0)
}

fn composite(seed: u64, ds: usize, de: usize) -> CompositeHamiltonian<f64> {
    let mut r = rng(seed);
    CompositeHamiltonian::new(
        HilbertLayout::new(ds, de).unwrap(),
        unit_hermitian(&mut r, ds),
        unit_hermitian(&mut r, de),
        unit_hermitian(&mut r, ds * de),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gibbs_and_mean_force_round_trip(seed in any::<u64>(), ds in 2usize..5, de in 1usize..5, beta in 0.05f64..4.0) {
        let h = composite(seed, ds, de);
        let rho = gibbs_state(&h.total(), beta).unwrap();
        prop_assert!((linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-12);
        prop_assert!(linalg::hermiticity_defect(rho.matrix()) < 1e-12);
        prop_assert!(rho.eigh().min() >= -1e-12);
        let hmf = hamiltonian_of_mean_force(&h, beta).unwrap();
        let back = gibbs_state(&hmf.operator, beta).unwrap();
        let reduced = rho.reduce_system(&h.layout).unwrap();
        prop_assert!(max_abs(&(back.matrix() - reduced.matrix())) < 1e-10);
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>(), ds in 2usize..5, de in 1usize..5) {
        let mut r = rng(seed);
        let layout = HilbertLayout::new(ds, de).unwrap();
        let g = ginibre(&mut r, ds * de);
        let psd = &g * g.adjoint();
        let pt = layout.partial_trace_env(&psd).unwrap();
        prop_assert!((linalg::trace(&pt) - linalg::trace(&psd)).norm() < 1e-10 * psd.norm().max(1.0));
        prop_assert!(linalg::eigh(&linalg::hermitian_part(&pt)).min() >= -1e-10 * psd.norm().max(1.0));
    }

    #[test]
    fn liouvillian_and_evolution(seed in any::<u64>(), d in 2usize..6, t in 0.0f64..5.0) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let rho = random_density(&mut r, d);
        let lhs = schrodinger_generator(&h).apply(rho.matrix());
        let rhs = linalg::commutator(h.matrix(), rho.matrix()) * C::new(0.0, -1.0);
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12 * h.matrix().norm().max(1.0));
        let later = evolve_state(&rho, &h, t).unwrap();
        prop_assert!((linalg::trace(later.matrix()).re - 1.0).abs() < 1e-10);
        let (a, b) = (rho.eigh().values, later.eigh().values);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn inner_products_positive_definite(seed in any::<u64>(), d in 2usize..5, alpha in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let w = Weight::from_density(&random_density(&mut r, d));
        let x = random_hermitian(&mut r, d);
        for spec in [
            InnerProductSpec::HilbertSchmidt,
            InnerProductSpec::deformed(alpha, w.clone()).unwrap(),
            InnerProductSpec::KuboAveraged { weight: w.clone() },
            InnerProductSpec::ClassicalWeighted { weight: w.clone() },
        ] {
            let v = inner_product(x.matrix(), x.matrix(), &spec).unwrap();
            prop_assert!(v.re > 0.0);
            prop_assert!(v.im.abs() < 1e-12 * v.re.max(1.0));
        }
    }

    #[test]
    fn sigma_closed_form_matches_quadrature(seed in any::<u64>(), d in prop::sample::select(vec![2usize, 4])) {
        let mut r = rng(seed);
        let w = Weight::from_density(&random_density(&mut r, d));
        let x = ginibre(&mut r, d);
        let closed = sigma_transform(&x, &w).unwrap();
        let quad = sigma_transform_quadrature(&x, &w, 64).unwrap();
        prop_assert!(max_abs(&(closed - quad)) < 1e-8);
    }

    #[test]
    fn miracle_relation_holds(seed in any::<u64>(), d in 2usize..17, beta in prop::sample::select(vec![0.1, 1.0, 5.0])) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let x = random_hermitian(&mut r, d);
        let rep = miracle_residual(x.matrix(), &h, beta).unwrap();
        prop_assert!(rep.residual < 1e-10, "residual {}", rep.residual);
    }

    #[test]
    fn grabert_fixed_point_and_adjoint(seed in any::<u64>(), de in 1usize..4, beta in 0.1f64..3.0) {
        let h = composite(seed, 2, de);
        let p = GrabertProjector::new(Weight::gibbs(&h.total(), beta).unwrap(), h.layout).unwrap();
        prop_assume!(p.reduced_sigma().condition_number() < 1e8);
        let mut r = rng(seed ^ 0xabcd);
        let xs = ginibre(&mut r, 2);
        let lifted = h.layout.lift_system(&xs).unwrap();
        prop_assert!(max_abs(&(p.project(&lifted).unwrap() - &lifted)) < 1e-10);
        let rho = random_density(&mut r, 2 * de);
        let reduced = h.layout.partial_trace_env(&p.adjoint(rho.matrix()).unwrap()).unwrap();
        prop_assert!(max_abs(&(reduced - rho.reduce_system(&h.layout).unwrap().matrix())) < 1e-10);
    }

    #[test]
    fn necessary_condition_for_product_states(seed in any::<u64>(), de in 1usize..4, beta in 0.1f64..5.0) {
        let mut r = rng(seed);
        let layout = HilbertLayout::new(2, de).unwrap();
        let h = CompositeHamiltonian::uncoupled(layout, unit_hermitian(&mut r, 2), unit_hermitian(&mut r, de)).unwrap();
        let rho = gibbs_state(&h.total(), beta).unwrap();
        let x = random_hermitian(&mut r, 2);
        let rep = necessary_condition_residual(x.matrix(), &rho, layout, beta).unwrap();
        prop_assert!(rep.residual < 1e-10);
        let drift = drift_term_quantum(x.matrix(), &h, beta).unwrap();
        prop_assert!(drift.difference < 1e-8);
    }

    #[test]
    fn appendix_factorized_residual_vanishes(seed in any::<u64>(), ds in 2usize..5, de in 1usize..5, beta in 0.1f64..5.0) {
        let mut r = rng(seed);
        let mut marginal = |n: usize| {
            let v: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 0.01).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (ps, pe) = (marginal(ds), marginal(de));
        let state = ClassicalClassicalState::product(&ps, &pe).unwrap();
        let x = random_hermitian(&mut rng(seed ^ 1), ds);
        let rep = appendix_probe(&state, x.matrix(), beta).unwrap();
        prop_assert!(rep.residual < 1e-12 * (1.0 + x.matrix().norm() / beta));
    }

    #[test]
    fn split_reconstructs_and_is_orthogonal(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let k = Superoperator::from_matrix(ginibre(&mut r, d * d), d).unwrap();
        let w = Weight::from_density(&random_density(&mut r, d));
        for spec in [InnerProductSpec::HilbertSchmidt, InnerProductSpec::KuboAveraged { weight: w.clone() }] {
            let split = split_minimal_dissipation(&k, &spec).unwrap();
            prop_assert!(split.reconstruction < 1e-8);
            prop_assert!(split.orthogonality < 1e-8 * k.frobenius().max(1.0));
            prop_assert!(split.effective_hamiltonian.trace().abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_projector_idempotent(seed in any::<u64>(), d in 2usize..6) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, d);
        let p = SpectralProjector::new(&a, &random_density(&mut r, d)).unwrap();
        let b = ginibre(&mut r, d);
        let once = p.project(&b);
        prop_assert!(max_abs(&(p.project(&once) - &once)) < 1e-12 * once.norm().max(1.0));
    }
}

#[test]
fn log_mean_is_superadditive() {
    let mut r = rng(61);
    for _ in 0..1000 {
        let (a, b, x, y): (f64, f64, f64, f64) = (r.random(), r.random(), r.random(), r.random());
        assert!(log_mean(a + x, b + y) >= log_mean(a, b) + log_mean(x, y) - 1e-15);
    }
    let _ = c(0.0);
}
