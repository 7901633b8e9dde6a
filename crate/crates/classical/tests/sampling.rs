mod common;

use common::*;
use meanforce_classical::*;

fn variance_of_q(samples: &SampleSet) -> (f64, f64) {
    // Var(q) = E[q²] for a centred Gaussian; E[q²] has variance 2σ⁴/n
    mean_and_error(samples, |x| x[0] * x[0])
}

#[test]
fn harmonic_variance_at_unit_temperature() {
    let sys = single_oscillator(1.0, 1.0);
    let s = sample(&sys, 1.0, 200_000, 11);
    let (v, e) = variance_of_q(&s);
    assert!((v - 1.0).abs() < 3.0 * e, "{v} ± {e}");
    let (pv, pe) = mean_and_error(&s, |x| x[1] * x[1]);
    assert!((pv - 1.0).abs() < 3.0 * pe, "{pv} ± {pe}");
}

#[test]
fn equipartition_at_low_temperature() {
    let (k, beta) = (2.0, 4.0);
    let sys = single_oscillator(1.0, k);
    let s = sample(&sys, beta, 200_000, 12);
    let (v, e) = variance_of_q(&s);
    let expected = 1.0 / (beta * k);
    assert!((v - expected).abs() < 3.0 * e, "{v} ± {e} vs {expected}");
}

#[test]
fn coupled_covariances_match_inverse_stiffness() {
    let sys = harmonic_pair(0.5);
    let s = sample(&sys, 1.0, 400_000, 13);
    // ⟨q qᵀ⟩ = K⁻¹/β, K = [[1, .5], [.5, 1]]
    let inv = sys.stiffness().try_inverse().unwrap();
    let (qs2, e1) = mean_and_error(&s, |x| x[0] * x[0]);
    let (qsqe, e2) = mean_and_error(&s, |x| x[0] * x[1]);
    assert!((qs2 - inv[(0, 0)]).abs() < 3.0 * e1, "{qs2} vs {}", inv[(0, 0)]);
    assert!((qsqe - inv[(0, 1)]).abs() < 3.0 * e2, "{qsqe} vs {}", inv[(0, 1)]);
}

#[test]
fn same_seed_is_bitwise_identical() {
    let sys = quartic_pair();
    let a = sample(&sys, 1.0, 20_000, 5);
    let b = sample(&sys, 1.0, 20_000, 5);
    assert_eq!(a.raw(), b.raw());
    let c = sample(&sys, 1.0, 20_000, 6);
    assert_ne!(a.raw(), c.raw());
}

#[test]
fn chains_are_merged_in_order() {
    let sys = harmonic_pair(0.3);
    let cfg = SamplerConfig { n_chains: 3, ..Default::default() };
    let s = sample_canonical(&sys, 1.0, 10_001, 9, &cfg).unwrap();
    assert_eq!(s.len(), 10_001);
    assert_eq!(s.chain_ranges(), vec![(0, 3334), (3334, 6668), (6668, 10_001)]);
    for c in &s.chains {
        assert!(c.acceptance > 0.0 && c.acceptance < 1.0);
        assert!(c.statistical_inefficiency >= 1.0);
    }
    assert!(s.points().all(|x| x.iter().all(|v| v.is_finite())));
}

#[test]
fn poor_acceptance_is_reported() {
    let sys = single_oscillator(1.0, 1.0);
    let cfg = SamplerConfig { step: Some(200.0), ..Default::default() };
    let err = sample_canonical(&sys, 1.0, 1000, 1, &cfg).unwrap_err();
    assert!(matches!(err, Error::Acceptance { .. }), "{err}");
    let cfg = SamplerConfig { step: Some(1e-4), ..Default::default() };
    assert!(matches!(sample_canonical(&sys, 1.0, 1000, 1, &cfg), Err(Error::Acceptance { .. })));
}

#[test]
fn invalid_arguments() {
    let sys = single_oscillator(1.0, 1.0);
    assert!(sample_canonical(&sys, 0.0, 10, 1, &SamplerConfig::default()).is_err());
    assert!(sample_canonical(&sys, 1.0, 0, 1, &SamplerConfig::default()).is_err());
}

#[test]
fn canonical_ensemble_is_stationary_under_the_flow() {
    // ϱ_β i𝓛A = i𝓛(ϱ_β A) makes i𝓛 anti-self-adjoint under the ϱ_β product:
    // ⟨{A, H} w⟩ + ⟨A {w, H}⟩ = ⟨{Aw, H}⟩ = 0
    let sys = harmonic_pair(0.5);
    let s = sample(&sys, 1.0, 400_000, 21);
    let tests = [
        (Polynomial::new(4, vec![(1.0, vec![1, 0, 0, 1])]).unwrap(), Polynomial::constant(4, 1.0)),
        (Polynomial::new(4, vec![(1.0, vec![2, 1, 0, 0])]).unwrap(), Polynomial::new(4, vec![(1.0, vec![0, 0, 1, 0])]).unwrap()),
        (Polynomial::new(4, vec![(0.5, vec![0, 0, 2, 0]), (1.0, vec![1, 0, 0, 0])]).unwrap(), Polynomial::new(4, vec![(1.0, vec![1, 0, 0, 0])]).unwrap()),
    ];
    for (a, w) in &tests {
        let f = |x: &[f64]| {
            let d = liouvillian_drift(&[a, w], &sys, x).unwrap();
            d[0] * w.value(x) + a.value(x) * d[1]
        };
        let (m, e) = mean_and_error(&s, f);
        assert!(m.abs() < 3.0 * e, "{m} ± {e}");
    }
}
