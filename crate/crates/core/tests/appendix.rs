mod common;

use common::*;
use meanforce_core::appendix::ClassicalClassicalState;
use meanforce_core::*;
use nalgebra::DMatrix;

#[test]
fn factorized_state_has_zero_residual() {
    let state = ClassicalClassicalState::product(&[0.6, 0.3, 0.1], &[0.25, 0.75]).unwrap();
    let mut r = rng(51);
    let x = random_hermitian(&mut r, 3);
    let rep = appendix_probe(&state, x.matrix(), 1.2).unwrap();
    assert!(rep.residual < 1e-12);
    assert!(rep.kubo_residual < 1e-12);
    assert!(rep.quadrature_agreement < 1e-8);
    for p in &rep.pairs {
        assert!(p.difference.abs() < 1e-14);
    }
}

#[test]
fn equal_marginals_give_zero_commutator() {
    let state = ClassicalClassicalState::new(DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.4])).unwrap();
    let rep = appendix_probe(&state, &sigma_x(), 1.0).unwrap();
    assert!(rep.residual < 1e-15);
    assert!(rep.quadrature_agreement < 1e-8);
    // the scalar comparison is still informative
    assert!(rep.pairs[0].difference < 0.0);
}

#[test]
fn correlated_residual_vanishes_with_mixing() {
    let correlated = ClassicalClassicalState::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3])).unwrap();
    let product = correlated.decorrelated();
    let mut last = f64::INFINITY;
    for k in (0..=10).rev() {
        let eps = k as f64 / 10.0;
        let state = product.mix(&correlated, eps).unwrap();
        let rep = appendix_probe(&state, &sigma_x(), 1.0).unwrap();
        assert!(rep.quadrature_agreement < 1e-8);
        assert!(rep.residual <= last + 1e-15, "ε={eps}");
        last = rep.residual;
        if k == 0 {
            assert!(rep.residual < 1e-12);
        } else {
            assert!(rep.residual > 0.0);
        }
    }
}

#[test]
fn invalid_tables_are_rejected() {
    assert!(ClassicalClassicalState::new(DMatrix::from_row_slice(2, 1, &[0.5, 0.6])).is_err());
    assert!(ClassicalClassicalState::new(DMatrix::from_row_slice(2, 1, &[1.2, -0.2])).is_err());
}

#[test]
fn matrix_record_round_trip() {
    let mut r = rng(52);
    let m = ginibre(&mut r, 3);
    let rec = MatrixRecord::from_matrix(&m);
    let json = serde_json::to_string(&rec).unwrap();
    let back: MatrixRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_matrix::<f64>().unwrap(), m);
}
