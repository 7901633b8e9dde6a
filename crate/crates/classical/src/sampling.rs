//! Seeded Metropolis sampling of the canonical ensemble `e^{-βH}/Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::system_indices;
use crate::system::ClassicalSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub target_acceptance: f64,
    /// Fixed isotropic proposal width; tuned during burn-in when absent.
    pub step: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { n_chains: 8, burn_in: 10_000, thinning: 10, target_acceptance: 0.4, step: None }
    }
}

const TUNE_INTERVAL: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub samples: usize,
    pub step: f64,
    /// Production acceptance rate.
    pub acceptance: f64,
    /// `1 + 2Σρ(t)` of the thinned chain, worst over `Γ_S` and energy.
    pub statistical_inefficiency: f64,
}

/// Draws from `ϱ_β`, stored flat (`phase_dim` values per point) in chain order.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub beta: f64,
    pub seed: u64,
    pub n_system: usize,
    pub n_env: usize,
    data: Vec<f64>,
    phase_dim: usize,
    pub chains: Vec<ChainDiagnostics>,
}

impl SampleSet {
    /// Wraps externally generated points (e.g. an evolved ensemble).
    pub fn from_points(beta: f64, seed: u64, n_system: usize, n_env: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let phase_dim = 2 * (n_system + n_env);
        let mut data = Vec::with_capacity(points.len() * phase_dim);
        for p in &points {
            if p.len() != phase_dim {
                return Err(Error::InvalidArgument(format!("point of length {} (expected {phase_dim})", p.len())));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sample point"));
            }
            data.extend_from_slice(p);
        }
        let chains = vec![ChainDiagnostics {
            chain: 0,
            samples: points.len(),
            step: 0.0,
            acceptance: f64::NAN,
            statistical_inefficiency: 1.0,
        }];
        Ok(Self { beta, seed, n_system, n_env, data, phase_dim, chains })
    }

    /// Copy with `Γ_S` shifted by `shift = (Δq_S..., Δp_S...)`.
    pub fn displaced(&self, shift: &[f64]) -> Result<Self> {
        let ns = self.n_system;
        if shift.len() != 2 * ns {
            return Err(Error::InvalidArgument(format!("shift needs {} entries", 2 * ns)));
        }
        let n = ns + self.n_env;
        let mut out = self.clone();
        for x in out.data.chunks_exact_mut(self.phase_dim) {
            for i in 0..ns {
                x[i] += shift[i];
                x[n + i] += shift[ns + i];
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.phase_dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn phase_dim(&self) -> usize {
        self.phase_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.phase_dim..(i + 1) * self.phase_dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.phase_dim)
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// Worst per-chain statistical inefficiency (at least one).
    pub fn statistical_inefficiency(&self) -> f64 {
        self.chains.iter().map(|c| c.statistical_inefficiency).fold(1.0, f64::max)
    }

    /// Factor by which naive standard errors are inflated.
    pub fn error_inflation(&self) -> f64 {
        self.statistical_inefficiency().sqrt()
    }

    /// Mean acceptance rate weighted by chain length.
    pub fn acceptance_rate(&self) -> f64 {
        let n: usize = self.chains.iter().map(|c| c.samples).sum();
        self.chains.iter().map(|c| c.acceptance * c.samples as f64).sum::<f64>() / n.max(1) as f64
    }

    /// `[start, end)` point ranges of each chain.
    pub fn chain_ranges(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.chains
            .iter()
            .map(|c| {
                let r = (start, start + c.samples);
                start += c.samples;
                r
            })
            .collect()
    }
}

struct ChainOutput {
    data: Vec<f64>,
    diagnostics: ChainDiagnostics,
}

fn run_chain(system: &dyn ClassicalSystem, beta: f64, n: usize, seed: u64, chain: usize, cfg: &SamplerConfig) -> Result<ChainOutput> {
    let dim = system.phase_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    let mut x = vec![0.0; dim];
    let mut e = system.energy(&x);
    let mut proposal = vec![0.0; dim];
    // thermal scale of a unit-stiffness coordinate
    let mut step = cfg.step.unwrap_or(1.0 / beta.sqrt());
    let mut accepted = 0usize;

    let mut mh = |x: &mut Vec<f64>, e: &mut f64, step: f64, rng: &mut ChaCha8Rng| -> bool {
        for (p, &xi) in proposal.iter_mut().zip(x.iter()) {
            let z: f64 = rng.sample(StandardNormal);
            *p = xi + step * z;
        }
        let e_new = system.energy(&proposal);
        let log_u: f64 = rng.random::<f64>().ln();
        if e_new.is_finite() && log_u < -beta * (e_new - *e) {
            x.copy_from_slice(&proposal);
            *e = e_new;
            true
        } else {
            false
        }
    };

    for k in 1..=cfg.burn_in {
        if mh(&mut x, &mut e, step, &mut rng) {
            accepted += 1;
        }
        if cfg.step.is_none() && k % TUNE_INTERVAL == 0 {
            let rate = accepted as f64 / TUNE_INTERVAL as f64;
            step *= ((rate - cfg.target_acceptance) * 2.0).exp();
            accepted = 0;
        }
    }

    let thin = cfg.thinning.max(1);
    let mut data = Vec::with_capacity(n * dim);
    accepted = 0;
    for _ in 0..n {
        for _ in 0..thin {
            if mh(&mut x, &mut e, step, &mut rng) {
                accepted += 1;
            }
        }
        data.extend_from_slice(&x);
    }
    let acceptance = if n == 0 { 0.0 } else { accepted as f64 / (n * thin) as f64 };
    if n > 0 && !(0.1..=0.9).contains(&acceptance) {
        return Err(Error::Acceptance { chain, rate: acceptance });
    }
    let statistical_inefficiency = chain_inefficiency(system, &data, dim);
    Ok(ChainOutput {
        data,
        diagnostics: ChainDiagnostics { chain, samples: n, step, acceptance, statistical_inefficiency },
    })
}

fn chain_inefficiency(system: &dyn ClassicalSystem, data: &[f64], dim: usize) -> f64 {
    let idx = system_indices(system);
    let mut series: Vec<Vec<f64>> = idx.iter().map(|&i| data.chunks_exact(dim).map(|x| x[i]).collect()).collect();
    series.push(data.chunks_exact(dim).map(|x| system.energy(x)).collect());
    series.iter().map(|s| statistical_inefficiency(s)).fold(1.0, f64::max)
}

/// `g = 1 + 2 Σ_{t=1}^{M} ρ(t)` with Sokal's self-consistent window `M ≥ 5 τ`.
pub fn statistical_inefficiency(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return 1.0;
    }
    let mut g = 1.0;
    for t in 1..n / 2 {
        let c: f64 = (0..n - t).map(|i| (series[i] - mean) * (series[i + t] - mean)).sum::<f64>() / (n as f64 * var);
        g += 2.0 * c;
        if t as f64 >= 5.0 * g {
            break;
        }
    }
    g.max(1.0)
}

/// Metropolis random walk with per-chain burn-in, step tuning and thinning.
/// Chains run in parallel and are concatenated in chain order.
pub fn sample_canonical(
    system: &dyn ClassicalSystem,
    beta: f64,
    n_samples: usize,
    seed: u64,
    config: &SamplerConfig,
) -> Result<SampleSet> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("inverse temperature {beta} must be positive")));
    }
    if n_samples == 0 || config.n_chains == 0 {
        return Err(Error::InvalidArgument("need at least one sample and one chain".into()));
    }
    if let Some(s) = config.step {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument("proposal step must be positive".into()));
        }
    }
    let chains = config.n_chains;
    let per = |c: usize| n_samples / chains + usize::from(c < n_samples % chains);
    let outputs: Vec<Result<ChainOutput>> =
        (0..chains).into_par_iter().map(|c| run_chain(system, beta, per(c), seed, c, config)).collect();
    let mut data = Vec::with_capacity(n_samples * system.phase_dim());
    let mut diagnostics = Vec::with_capacity(chains);
    for out in outputs {
        let out = out?;
        data.extend_from_slice(&out.data);
        diagnostics.push(out.diagnostics);
    }
    Ok(SampleSet {
        beta,
        seed,
        n_system: system.n_system(),
        n_env: system.n_env(),
        data,
        phase_dim: system.phase_dim(),
        chains: diagnostics,
    })
}
