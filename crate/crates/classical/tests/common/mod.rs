#![allow(dead_code)]

use meanforce_classical::*;

pub fn harmonic_pair(c: f64) -> CoupledOscillators {
    CoupledOscillators::harmonic_pair(1.0, 1.0, c).unwrap()
}

pub fn quartic_pair() -> CoupledOscillators {
    CoupledOscillators::quartic_pair(1.0, 1.0, 0.5, 0.1).unwrap()
}

pub fn single_oscillator(m: f64, k: f64) -> CoupledOscillators {
    CoupledOscillators::new(
        1,
        0,
        OscillatorParams { masses: vec![m], springs: vec![k], couplings: vec![], quartic: vec![] },
    )
    .unwrap()
}

pub fn sample(system: &dyn ClassicalSystem, beta: f64, n: usize, seed: u64) -> SampleSet {
    sample_canonical(system, beta, n, seed, &SamplerConfig::default()).unwrap()
}

/// Grid over `Γ_S` spanning all samples.
pub fn covering_grid(samples: &SampleSet, bins: usize) -> (BinGrid, RelevantSet) {
    let rel = RelevantSet::for_samples(samples);
    let vals = rel.values(samples);
    let grid = BinGrid::covering(rel.labels(), vals.iter().map(|v| v.as_slice()), bins).unwrap();
    (grid, rel)
}

/// Sample mean and its standard error, inflated by the set's `√g`.
pub fn mean_and_error(samples: &SampleSet, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let v: Vec<f64> = samples.points().map(f).collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt() * samples.error_inflation())
}

/// Free particle `H = p²/2m` with one system and no environment.
pub struct FreeParticle;

impl ClassicalSystem for FreeParticle {
    fn n_system(&self) -> usize {
        1
    }
    fn n_env(&self) -> usize {
        0
    }
    fn energy(&self, x: &[f64]) -> f64 {
        0.5 * x[1] * x[1]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0, x[1]]
    }
    fn separable(&self) -> Option<&dyn meanforce_classical::system::SeparableSystem> {
        Some(self)
    }
}

impl meanforce_classical::system::SeparableSystem for FreeParticle {
    fn masses(&self) -> &[f64] {
        &[1.0]
    }
    fn potential(&self, _q: &[f64]) -> f64 {
        0.0
    }
    fn force(&self, _q: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
}
