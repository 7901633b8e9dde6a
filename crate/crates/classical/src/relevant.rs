//! Relevant observables `A` and per-bin accumulation of sample statistics.

use rayon::prelude::*;

use crate::grid::BinGrid;
use crate::observables::{Coordinate, Observable};
use crate::sampling::SampleSet;

/// The observables whose values label the bins.
pub struct RelevantSet {
    observables: Vec<Box<dyn Observable>>,
    labels: Vec<String>,
}

impl std::fmt::Debug for RelevantSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RelevantSet").field("labels", &self.labels).finish()
    }
}

impl RelevantSet {
    /// `A = Γ_S = (q_S..., p_S...)`, labelled `q0, ..., p0, ...`.
    pub fn system_coordinates(n_system: usize, n_env: usize) -> Self {
        let n = n_system + n_env;
        let observables: Vec<Box<dyn Observable>> = (0..n_system)
            .chain(n..n + n_system)
            .map(|i| Box::new(Coordinate(i)) as Box<dyn Observable>)
            .collect();
        let labels = (0..n_system).map(|i| format!("q{i}")).chain((0..n_system).map(|i| format!("p{i}"))).collect();
        Self { observables, labels }
    }

    pub fn for_samples(samples: &SampleSet) -> Self {
        Self::system_coordinates(samples.n_system, samples.n_env)
    }

    pub fn custom(observables: Vec<Box<dyn Observable>>, labels: Vec<String>) -> Self {
        assert_eq!(observables.len(), labels.len(), "one label per observable");
        Self { observables, labels }
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn observables(&self) -> Vec<&dyn Observable> {
        self.observables.iter().map(|o| o.as_ref()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.observables.iter().map(|o| o.value(x)).collect()
    }

    pub fn bin(&self, grid: &BinGrid, x: &[f64]) -> Option<usize> {
        grid.bin_of(&self.eval(x))
    }

    /// Coordinates `A(Γ)` of every sample.
    pub fn values(&self, samples: &SampleSet) -> Vec<Vec<f64>> {
        samples.points().map(|x| self.eval(x)).collect()
    }
}

/// Per-bin count, mean and sum of squared deviations of a `k`-vector.
#[derive(Debug, Clone)]
pub(crate) struct BinStats {
    pub k: usize,
    pub n: Vec<u64>,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
    pub outside: u64,
}

impl BinStats {
    fn new(bins: usize, k: usize) -> Self {
        Self { k, n: vec![0; bins], mean: vec![0.0; bins * k], m2: vec![0.0; bins * k], outside: 0 }
    }

    fn push(&mut self, bin: usize, v: &[f64]) {
        self.n[bin] += 1;
        let n = self.n[bin] as f64;
        for (c, &x) in v.iter().enumerate() {
            let i = bin * self.k + c;
            let delta = x - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (x - self.mean[i]);
        }
    }

    fn merge(&mut self, other: &Self) {
        self.outside += other.outside;
        for bin in 0..self.n.len() {
            let (na, nb) = (self.n[bin], other.n[bin]);
            if nb == 0 {
                continue;
            }
            let range = bin * self.k..(bin + 1) * self.k;
            if na == 0 {
                self.mean[range.clone()].copy_from_slice(&other.mean[range.clone()]);
                self.m2[range.clone()].copy_from_slice(&other.m2[range]);
                self.n[bin] = nb;
                continue;
            }
            let n = (na + nb) as f64;
            for i in range {
                let delta = other.mean[i] - self.mean[i];
                self.mean[i] += delta * nb as f64 / n;
                self.m2[i] += other.m2[i] + delta * delta * na as f64 * nb as f64 / n;
            }
            self.n[bin] = na + nb;
        }
    }

    /// Standard error of the mean in `bin`, component `c`, before inflation.
    pub fn standard_error(&self, bin: usize, c: usize) -> Option<f64> {
        let n = self.n[bin];
        (n >= 2).then(|| (self.m2[bin * self.k + c] / ((n - 1) * n) as f64).sqrt())
    }

    pub fn mean(&self, bin: usize, c: usize) -> Option<f64> {
        (self.n[bin] > 0).then(|| self.mean[bin * self.k + c])
    }
}

const SHARD: usize = 1 << 15;

/// Accumulates `value(Γ)` per bin of `A(Γ)` over points `range` of the set.
/// Shards are processed in parallel and merged in index order, so the result
/// does not depend on the thread count.
pub(crate) fn accumulate<F>(
    grid: &BinGrid,
    relevant: &RelevantSet,
    samples: &SampleSet,
    range: (usize, usize),
    k: usize,
    value: F,
) -> BinStats
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let (start, end) = range;
    let n_bins = grid.n_bins();
    let shards: Vec<(usize, usize)> =
        (start..end).step_by(SHARD).map(|s| (s, (s + SHARD).min(end))).collect();
    let parts: Vec<BinStats> = shards
        .into_par_iter()
        .map(|(a, b)| {
            let mut stats = BinStats::new(n_bins, k);
            let mut buf = vec![0.0; k];
            for i in a..b {
                let x = samples.point(i);
                match relevant.bin(grid, x) {
                    Some(bin) => {
                        value(x, &mut buf);
                        stats.push(bin, &buf);
                    }
                    None => stats.outside += 1,
                }
            }
            stats
        })
        .collect();
    let mut total = BinStats::new(n_bins, k);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// [`accumulate`] over each chain of the set separately, plus the merged total.
pub(crate) fn accumulate_by_chain<F>(
    grid: &BinGrid,
    relevant: &RelevantSet,
    samples: &SampleSet,
    k: usize,
    value: F,
) -> (BinStats, Vec<BinStats>)
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let chains: Vec<BinStats> =
        samples.chain_ranges().into_iter().map(|r| accumulate(grid, relevant, samples, r, k, &value)).collect();
    let mut total = BinStats::new(grid.n_bins(), k);
    for c in &chains {
        total.merge(c);
    }
    (total, chains)
}

/// Bins need this many samples in every chain to enter the pooled estimates below.
const POOL_MIN_PER_CHAIN: u64 = 20;

/// Variance inflation of per-bin counts, pooled over bins from the
/// between-chain scatter: `Σ_j (c_j - N_j p)² / (N_j p (1-p))`, averaged over
/// bins and divided by `J - 1`. At least one; one when there is a single chain.
pub(crate) fn count_inefficiency(chain_counts: &[Vec<u64>], chain_sizes: &[usize]) -> f64 {
    let j = chain_counts.len();
    if j < 2 {
        return 1.0;
    }
    let n_total: f64 = chain_sizes.iter().sum::<usize>() as f64;
    let (mut sum, mut bins) = (0.0, 0usize);
    for b in 0..chain_counts[0].len() {
        if chain_counts.iter().any(|c| c[b] < POOL_MIN_PER_CHAIN) {
            continue;
        }
        let p = chain_counts.iter().map(|c| c[b]).sum::<u64>() as f64 / n_total;
        let stat: f64 = chain_counts
            .iter()
            .zip(chain_sizes)
            .map(|(c, &nj)| {
                let e = nj as f64 * p;
                (c[b] as f64 - e).powi(2) / (e * (1.0 - p))
            })
            .sum();
        sum += stat / (j - 1) as f64;
        bins += 1;
    }
    if bins == 0 {
        1.0
    } else {
        (sum / bins as f64).max(1.0)
    }
}

/// Variance inflation of per-bin means of component `c`, pooled as in
/// [`count_inefficiency`] from `Σ_j n_j (m_j - m)² / s²`.
pub(crate) fn mean_inefficiency(total: &BinStats, chains: &[BinStats], c: usize) -> f64 {
    let j = chains.len();
    if j < 2 {
        return 1.0;
    }
    let (mut sum, mut bins) = (0.0, 0usize);
    for b in 0..total.n.len() {
        if chains.iter().any(|s| s.n[b] < POOL_MIN_PER_CHAIN) {
            continue;
        }
        let i = b * total.k + c;
        let s2 = total.m2[i] / (total.n[b] - 1) as f64;
        if !(s2 > 0.0) {
            continue;
        }
        let m = total.mean[i];
        let stat: f64 = chains.iter().map(|s| s.n[b] as f64 * (s.mean[i] - m).powi(2)).sum::<f64>() / s2;
        sum += stat / (j - 1) as f64;
        bins += 1;
    }
    if bins == 0 {
        1.0
    } else {
        (sum / bins as f64).max(1.0)
    }
}

/// Bin index of each point (`None` outside the grid).
pub(crate) fn assign(grid: &BinGrid, relevant: &RelevantSet, samples: &SampleSet) -> Vec<Option<u32>> {
    samples.raw().par_chunks(samples.phase_dim()).map(|x| relevant.bin(grid, x).map(|b| b as u32)).collect()
}
