mod common;

use common::*;
use meanforce_core::grabert::{reduced_gibbs, ReducedSigma};
use meanforce_core::inner_product::{sigma_inverse, sigma_transform_quadrature};
use meanforce_core::linalg::{self, expm};
use meanforce_core::*;

fn c(x: f64) -> C<f64> {
    C::new(x, 0.0)
}

/// Composite Simpson rule on `ϱ^α X ϱ^{1-α}` with powers from a Padé
/// exponential of `α ln ϱ`.
fn simpson_sigma(x: &CMatrix<f64>, rho: &DensityMatrix<f64>, panels: usize) -> CMatrix<f64> {
    let eig = rho.eigh();
    let log = eig.map(|v| v.ln());
    let h = 1.0 / panels as f64;
    let mut acc = CMatrix::zeros(x.nrows(), x.ncols());
    for k in 0..=panels {
        let a = k as f64 * h;
        let w = if k == 0 || k == panels { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += expm(&(&log * c(a))) * x * expm(&(&log * c(1.0 - a))) * c(w * h / 3.0);
    }
    acc
}

fn diag(v: &[f64]) -> DensityMatrix<f64> {
    DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_iterator(v.len(), v.iter().map(|&x| c(x))))).unwrap()
}

#[test]
fn inner_product_examples() {
    let mut r = rng(11);
    let x = ginibre(&mut r, 3);
    let y = ginibre(&mut r, 3);
    let hs = inner_product(&x, &y, &InnerProductSpec::HilbertSchmidt).unwrap();
    let mixed = Weight::from_density(&DensityMatrix::maximally_mixed(3));
    for spec in [
        InnerProductSpec::deformed(0.3, mixed.clone()).unwrap(),
        InnerProductSpec::KuboAveraged { weight: mixed.clone() },
        InnerProductSpec::ClassicalWeighted { weight: mixed.clone() },
    ] {
        let v = inner_product(&x, &y, &spec).unwrap();
        assert!((v - hs / c(3.0)).norm() < 1e-13, "{}", spec.name());
    }

    let w = Weight::from_density(&random_density(&mut r, 3));
    let id = CMatrix::<f64>::identity(3, 3);
    let v = inner_product(&id, &id, &InnerProductSpec::KuboAveraged { weight: w }).unwrap();
    assert!((v - c(1.0)).norm() < 1e-13);

    let rho = diag(&[0.75, 0.25]);
    let spec = InnerProductSpec::KuboAveraged { weight: Weight::from_density(&rho) };
    let v = inner_product(&sigma_x(), &sigma_x(), &spec).unwrap();
    let closed = 2.0 * 0.5 / 3f64.ln();
    assert!((v.re - closed).abs() < 1e-14);
    let quad = (simpson_sigma(&sigma_x(), &rho, 2000) * sigma_x()).trace();
    assert!((v - quad).norm() < 1e-8);
    assert!(InnerProductSpec::deformed(1.5, Weight::from_density(&rho)).is_err());
}

#[test]
fn sigma_transform_examples() {
    let mut r = rng(12);
    let x = ginibre(&mut r, 3);
    let mixed = Weight::from_density(&DensityMatrix::maximally_mixed(3));
    assert!(max_abs(&(sigma_transform(&x, &mixed).unwrap() - &x / c(3.0))) < 1e-14);

    let rho = random_density(&mut r, 3);
    let commuting = rho.eigh().map(|v| v * v - 2.0 * v);
    let w = Weight::from_density(&rho);
    assert!(max_abs(&(sigma_transform(&commuting, &w).unwrap() - rho.matrix() * &commuting)) < 1e-13);

    let q = random_density(&mut r, 2);
    let wq = Weight::from_density(&q);
    let closed = sigma_transform(&sigma_x(), &wq).unwrap();
    assert!(max_abs(&(&closed - simpson_sigma(&sigma_x(), &q, 2000))) < 1e-8);
    assert!(max_abs(&(&closed - sigma_transform_quadrature(&sigma_x(), &wq, 64).unwrap())) < 1e-8);
    let back = sigma_inverse(&closed, &wq).unwrap();
    assert!(max_abs(&(back - sigma_x())) < 1e-10);
}

#[test]
fn sigma_inverse_rejects_floored_weight() {
    let rho = diag(&[1.0, 0.0]);
    let w = Weight::from_density(&rho);
    assert_eq!(w.floored(), 1);
    assert!(matches!(sigma_inverse(&sigma_x(), &w), Err(Error::IllConditioned { .. })));
}

#[test]
fn miracle_relation_examples() {
    let mut r = rng(13);
    let h = random_hermitian(&mut r, 4);
    let rep = miracle_residual(h.matrix(), &h, 1.0).unwrap();
    assert!(rep.residual < 1e-14 && rep.lhs_norm < 1e-12);
    let commuting = h.eigh().map(|e| e.sin());
    assert!(miracle_residual(&commuting, &h, 2.0).unwrap().residual < 1e-12);
    for &beta in &[0.1, 1.0, 5.0] {
        for d in [2, 4] {
            let h = random_hermitian(&mut r, d);
            let x = random_hermitian(&mut r, d);
            let rep = miracle_residual(x.matrix(), &h, beta).unwrap();
            assert!(rep.residual < 1e-10, "β={beta} d={d}: {}", rep.residual);
            assert!(rep.lhs_norm > 1e-6);
        }
    }
}

#[test]
fn reduced_sigma_examples() {
    let mut r = rng(14);
    let layout = HilbertLayout::new(2, 2).unwrap();
    let rs = random_density(&mut r, 2);
    let re = random_density(&mut r, 2);
    let product = Weight::from_density(&rs.tensor(&re));
    let sigma_s = ReducedSigma::new(&product, layout).unwrap();
    let xs = ginibre(&mut r, 2);
    let system_only = sigma_transform(&xs, &Weight::from_density(&rs)).unwrap();
    assert!(max_abs(&(sigma_s.apply(&xs) - system_only)) < 1e-13);

    let mixed = Weight::from_density(&DensityMatrix::maximally_mixed(4));
    let sigma_s = ReducedSigma::new(&mixed, layout).unwrap();
    assert!(max_abs(&(sigma_s.apply(&xs) - &xs / c(2.0))) < 1e-14);

    let h = CompositeHamiltonian::new(
        layout,
        random_hermitian(&mut r, 2),
        random_hermitian(&mut r, 2),
        random_hermitian(&mut r, 4),
    )
    .unwrap();
    let weight = Weight::gibbs(&h.total(), 1.0).unwrap();
    let sigma_s = ReducedSigma::new(&weight, layout).unwrap();
    let back = sigma_s.solve(&sigma_s.apply(&xs)).unwrap();
    assert!(max_abs(&(back - &xs)) < 1e-10);
    assert!(sigma_s.condition_number() >= 1.0);
}

fn random_composite(r: &mut rand_chacha::ChaCha8Rng, ds: usize, de: usize, g: f64) -> CompositeHamiltonian<f64> {
    let layout = HilbertLayout::new(ds, de).unwrap();
    CompositeHamiltonian::new(
        layout,
        random_hermitian(r, ds),
        random_hermitian(r, de),
        random_hermitian(r, ds * de).scaled(g),
    )
    .unwrap()
}

#[test]
fn grabert_projector_examples() {
    let mut r = rng(15);
    let h = random_composite(&mut r, 2, 3, 0.7);
    let layout = h.layout;
    let p = GrabertProjector::new(Weight::gibbs(&h.total(), 0.8).unwrap(), layout).unwrap();
    let xs = ginibre(&mut r, 2);
    let lifted = layout.lift_system(&xs).unwrap();
    assert!(max_abs(&(p.project(&lifted).unwrap() - &lifted)) < 1e-10);

    let rho = random_density(&mut r, 6);
    let rs = rho.reduce_system(&layout).unwrap();
    let adj = p.adjoint(rho.matrix()).unwrap();
    assert!(max_abs(&(layout.partial_trace_env(&adj).unwrap() - rs.matrix())) < 1e-10);

    let x = ginibre(&mut r, 6);
    let once = p.project(&x).unwrap();
    assert!(max_abs(&(p.project(&once).unwrap() - &once)) < 1e-10);

    // self-adjoint under the Kubo product built on the same weight
    let spec = InnerProductSpec::KuboAveraged { weight: p.weight().clone() };
    let y = ginibre(&mut r, 6);
    let lhs = inner_product(&p.project(&x).unwrap(), &y, &spec).unwrap();
    let rhs = inner_product(&x, &p.project(&y).unwrap(), &spec).unwrap();
    assert!((lhs - rhs).norm() < 1e-8);

    // trace duality between 𝒫 and 𝒫†
    let mu = random_density(&mut r, 6);
    let a = (mu.matrix() * p.project(&x).unwrap()).trace();
    let b = (&x * p.adjoint(mu.matrix()).unwrap()).trace();
    assert!((a - b).norm() < 1e-10);
}

#[test]
fn necessary_condition_factorized_and_commuting() {
    let mut r = rng(16);
    let layout = HilbertLayout::new(2, 2).unwrap();
    let hs = random_hermitian(&mut r, 2);
    let he = random_hermitian(&mut r, 2);
    let h = CompositeHamiltonian::uncoupled(layout, hs.clone(), he).unwrap();
    let rho = gibbs_state(&h.total(), 1.3).unwrap();
    let x = random_hermitian(&mut r, 2);
    let rep = necessary_condition_residual(x.matrix(), &rho, layout, 1.3).unwrap();
    assert!(rep.residual < 1e-10);
    assert!(rep.rhs_norm > 1e-4);

    let correlated = random_composite(&mut r, 2, 2, 1.0);
    let rho = gibbs_state(&correlated.total(), 1.0).unwrap();
    let rs = rho.reduce_system(&layout).unwrap();
    let commuting = rs.eigh().map(|v| v.powi(3));
    let rep = necessary_condition_residual(&commuting, &rho, layout, 1.0).unwrap();
    assert!(rep.lhs_norm < 1e-12 && rep.rhs_norm < 1e-12);
}

#[test]
fn necessary_condition_correlated_is_reported() {
    let layout = HilbertLayout::new(2, 2).unwrap();
    let xx = linalg::kron(&sigma_x(), &sigma_x()) * c(0.5);
    let h = CompositeHamiltonian::new(
        layout,
        HermitianOperator::new(sigma_z() * c(0.5)).unwrap(),
        HermitianOperator::new(sigma_z() * c(0.3)).unwrap(),
        HermitianOperator::new(xx).unwrap(),
    )
    .unwrap();
    let rho = gibbs_state(&h.total(), 1.0).unwrap();
    let rep = necessary_condition_residual(&sigma_x(), &rho, layout, 1.0).unwrap();
    assert!(rep.residual.is_finite());
    assert!(rep.condition_number.is_finite());
}

#[test]
fn quantum_drift_examples() {
    let mut r = rng(17);
    let layout = HilbertLayout::new(2, 3).unwrap();
    let hs = random_hermitian(&mut r, 2);
    let h = CompositeHamiltonian::uncoupled(layout, hs.clone(), random_hermitian(&mut r, 3)).unwrap();
    let xs = random_hermitian(&mut r, 2);
    let drift = drift_term_quantum(xs.matrix(), &h, 0.9).unwrap();
    let expected = linalg::commutator(hs.matrix(), xs.matrix()) * C::new(0.0, 1.0);
    assert!(max_abs(&(&drift.drift - expected)) < 1e-10);
    assert!(drift.difference < 1e-10);

    // factorized Gibbs state with a nontrivial environment: coupling acting
    // on the environment alone keeps the state a product
    let he_extra = random_hermitian(&mut r, 3);
    let coupling = HermitianOperator::new(layout.lift_env(he_extra.matrix()).unwrap()).unwrap();
    let h = CompositeHamiltonian::new(layout, hs, random_hermitian(&mut r, 3), coupling).unwrap();
    let drift = drift_term_quantum(xs.matrix(), &h, 1.4).unwrap();
    assert!(drift.difference < 1e-8);
    assert!(drift.necessary_condition.residual < 1e-10);

    let correlated = random_composite(&mut r, 2, 2, 1.0);
    let drift = drift_term_quantum(xs.matrix(), &correlated, 1.0).unwrap();
    assert!(drift.difference.is_finite());
    let rho_s = reduced_gibbs(&correlated, 1.0).unwrap();
    assert!((linalg::trace(rho_s.matrix()).re - 1.0).abs() < 1e-13);
}

#[test]
fn spectral_projector_examples() {
    let mut r = rng(18);
    let a = random_hermitian(&mut r, 4);
    let weight = random_density(&mut r, 4);
    let p = SpectralProjector::new(&a, &weight).unwrap();
    assert!(max_abs(&(p.project(a.matrix()) - a.matrix())) < 1e-12);
    let b = ginibre(&mut r, 4);
    let once = p.project(&b);
    assert!(max_abs(&(p.project(&once) - &once)) < 1e-12);
    let rho = random_density(&mut r, 4);
    let adj = p.adjoint(rho.matrix());
    assert!((rho.expectation(a.matrix()) - (a.matrix() * adj).trace()).norm() < 1e-12);

    // A = σ_z ⊗ I with a product weight diagonal in the σ_z basis
    let layout = HilbertLayout::new(2, 2).unwrap();
    let az = HermitianOperator::new(layout.lift_system(&sigma_z()).unwrap()).unwrap();
    let ws = diag(&[0.7, 0.3]);
    let we = random_density(&mut r, 2);
    let p = SpectralProjector::new(&az, &ws.tensor(&we)).unwrap();
    let commuting = diag(&[0.2, 0.8]).tensor(&we);
    assert!(p.reduced_state_defect(&commuting, &layout).unwrap() < 1e-13);
    let noncommuting = random_density(&mut r, 2).tensor(&we);
    assert!(p.reduced_state_defect(&noncommuting, &layout).unwrap() > 1e-3);
}
