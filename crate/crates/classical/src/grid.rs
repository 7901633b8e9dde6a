//! Histogram bins over relevant-observable values and fields defined on them.
//!
//! Each bin is the indicator `ψ_α` of a cell; the bins partition the grid box.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_BINS_PER_AXIS: usize = 8;
pub const MAX_TOTAL_BINS: usize = 1_000_000;
pub const DEFAULT_BINS_PER_AXIS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub label: String,
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl Axis {
    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }

    pub fn centre(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.width()
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.min + i as f64 * w, self.min + (i + 1) as f64 * w)
    }

    fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.min && x <= self.max) {
            return None;
        }
        let i = ((x - self.min) / self.width()) as usize;
        Some(i.min(self.bins - 1))
    }
}

/// Row-major product grid; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct BinGrid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
}

impl TryFrom<Vec<Axis>> for BinGrid {
    type Error = Error;
    fn try_from(axes: Vec<Axis>) -> Result<Self> {
        Self::new(axes)
    }
}

impl From<BinGrid> for Vec<Axis> {
    fn from(g: BinGrid) -> Self {
        g.axes
    }
}

impl BinGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one axis".into()));
        }
        let mut total: usize = 1;
        for a in &axes {
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(Error::InvalidArgument(format!("axis {}: need finite min < max", a.label)));
            }
            if a.bins < MIN_BINS_PER_AXIS {
                return Err(Error::InvalidArgument(format!(
                    "axis {}: {} bins (minimum {MIN_BINS_PER_AXIS})",
                    a.label, a.bins
                )));
            }
            total = total.checked_mul(a.bins).filter(|&t| t <= MAX_TOTAL_BINS).ok_or_else(|| {
                Error::InvalidArgument(format!("grid exceeds {MAX_TOTAL_BINS} bins"))
            })?;
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].bins;
        }
        Ok(Self { axes, strides })
    }

    /// Smallest box holding every point.
    pub fn covering<'a>(
        labels: &[String],
        points: impl Iterator<Item = &'a [f64]>,
        bins: usize,
    ) -> Result<Self> {
        let d = labels.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let axes = (0..d)
            .map(|k| {
                let half = 0.5 * (hi[k] - lo[k]).max(1e-12) * (1.0 + 1e-9);
                let mid = 0.5 * (hi[k] + lo[k]);
                Axis { label: labels[k].clone(), min: mid - half, max: mid + half, bins }
            })
            .collect();
        Self::new(axes)
    }

    /// Symmetric box `[-extent_d, extent_d]`.
    pub fn symmetric(labels: &[&str], extents: &[f64], bins: usize) -> Result<Self> {
        Self::new(
            labels
                .iter()
                .zip(extents)
                .map(|(l, &e)| Axis { label: (*l).to_string(), min: -e, max: e, bins })
                .collect(),
        )
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn n_bins(&self) -> usize {
        self.strides[0] * self.axes[0].bins
    }

    /// Volume of one cell.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    pub fn bin_of(&self, alpha: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (d, a) in self.axes.iter().enumerate() {
            idx += a.index(alpha[d])? * self.strides[d];
        }
        Some(idx)
    }

    pub fn multi_index(&self, bin: usize) -> Vec<usize> {
        self.axes.iter().enumerate().map(|(d, a)| (bin / self.strides[d]) % a.bins).collect()
    }

    pub fn centre(&self, bin: usize) -> Vec<f64> {
        self.multi_index(bin).iter().zip(&self.axes).map(|(&i, a)| a.centre(i)).collect()
    }

    /// Neighbour of `bin` one step along `axis` (`-1` or `+1`).
    pub fn neighbour(&self, bin: usize, axis: usize, up: bool) -> Option<usize> {
        let i = (bin / self.strides[axis]) % self.axes[axis].bins;
        if up {
            (i + 1 < self.axes[axis].bins).then(|| bin + self.strides[axis])
        } else {
            (i > 0).then(|| bin - self.strides[axis])
        }
    }

    /// Bins enclosed along every axis: on each axis line through the bin
    /// there is a populated bin strictly below and strictly above it.
    pub fn enclosed(&self, populated: &[bool]) -> Vec<bool> {
        let n = self.n_bins();
        let mut enclosed = vec![true; n];
        for (d, axis) in self.axes.iter().enumerate() {
            let s = self.strides[d];
            for bin in 0..n {
                if (bin / s) % axis.bins != 0 {
                    continue;
                }
                // bin is the start of a line along axis d
                let line = |i: usize| bin + i * s;
                let first = (0..axis.bins).find(|&i| populated[line(i)]);
                let last = (0..axis.bins).rev().find(|&i| populated[line(i)]);
                for i in 0..axis.bins {
                    let inside = matches!((first, last), (Some(f), Some(l)) if f < i && i < l);
                    if !inside {
                        enclosed[line(i)] = false;
                    }
                }
            }
        }
        enclosed
    }
}

/// Per-bin values of a (possibly vector-valued) quantity. Empty bins hold
/// `None`, never zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedField {
    pub grid: BinGrid,
    pub components: Vec<String>,
    /// `n_bins × components`, bin-major.
    values: Vec<Option<f64>>,
    errors: Vec<Option<f64>>,
    pub counts: Vec<u64>,
}

impl BinnedField {
    pub fn empty(grid: BinGrid, components: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let n = grid.n_bins();
        if counts.len() != n {
            return Err(Error::GridMismatch(format!("{} counts for {n} bins", counts.len())));
        }
        let k = components.len();
        Ok(Self { grid, components, values: vec![None; n * k], errors: vec![None; n * k], counts })
    }

    /// Field whose value in each bin is `f(centre)` with zero error and the given counts.
    pub fn from_fn(grid: BinGrid, components: Vec<String>, counts: Vec<u64>, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut field = Self::empty(grid, components, counts)?;
        for bin in 0..field.n_bins() {
            let v = f(&field.grid.centre(bin));
            for (c, x) in v.into_iter().enumerate() {
                field.set(bin, c, Some(x), Some(0.0));
            }
        }
        Ok(field)
    }

    pub fn n_bins(&self) -> usize {
        self.grid.n_bins()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn value(&self, bin: usize, c: usize) -> Option<f64> {
        self.values[bin * self.n_components() + c]
    }

    pub fn error(&self, bin: usize, c: usize) -> Option<f64> {
        self.errors[bin * self.n_components() + c]
    }

    pub fn set(&mut self, bin: usize, c: usize, value: Option<f64>, error: Option<f64>) {
        let k = self.n_components();
        self.values[bin * k + c] = value;
        self.errors[bin * k + c] = error;
    }

    /// All components of a bin, if every one is defined.
    pub fn vector(&self, bin: usize) -> Option<Vec<f64>> {
        (0..self.n_components()).map(|c| self.value(bin, c)).collect()
    }

    pub fn vector_error(&self, bin: usize) -> Option<Vec<f64>> {
        (0..self.n_components()).map(|c| self.error(bin, c)).collect()
    }

    pub fn is_defined(&self, bin: usize) -> bool {
        (0..self.n_components()).all(|c| self.value(bin, c).is_some())
    }

    pub fn defined_bins(&self) -> usize {
        (0..self.n_bins()).filter(|&b| self.is_defined(b)).count()
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Value at the bin containing `alpha`.
    pub fn lookup(&self, alpha: &[f64], c: usize) -> Option<f64> {
        self.grid.bin_of(alpha).and_then(|b| self.value(b, c))
    }

    /// CSV with columns `centre_<axis>...`, then `value_<component>,stderr_<component>`
    /// per component, then `count`. Undefined entries are empty cells. Rows
    /// follow the flat bin index.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.grid.axes().iter().map(|a| format!("centre_{}", a.label)).collect();
        for c in &self.components {
            header.push(format!("value_{c}"));
            header.push(format!("stderr_{c}"));
        }
        header.push("count".into());
        w.write_record(&header)?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for bin in 0..self.n_bins() {
            let mut row: Vec<String> = self.grid.centre(bin).iter().map(|x| x.to_string()).collect();
            for c in 0..self.n_components() {
                row.push(fmt(self.value(bin, c)));
                row.push(fmt(self.error(bin, c)));
            }
            row.push(self.counts[bin].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> BinGrid {
        BinGrid::symmetric(&["q", "p"], &[2.0, 1.0], 8).unwrap()
    }

    #[test]
    fn indexing_round_trips() {
        let g = grid();
        assert_eq!(g.n_bins(), 64);
        for bin in 0..g.n_bins() {
            assert_eq!(g.bin_of(&g.centre(bin)), Some(bin));
        }
        assert_eq!(g.bin_of(&[2.0, 1.0]), Some(63));
        assert_eq!(g.bin_of(&[2.1, 0.0]), None);
        assert!((g.volume() - 0.5 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(BinGrid::symmetric(&["q"], &[1.0], 4).is_err());
        assert!(BinGrid::new(vec![Axis { label: "q".into(), min: 1.0, max: 1.0, bins: 8 }]).is_err());
        assert!(BinGrid::symmetric(&["a", "b", "c"], &[1.0; 3], 128).is_err());
    }

    #[test]
    fn enclosed_bins_of_a_block() {
        let g = grid();
        let mut populated = vec![false; 64];
        for i in 2..6 {
            for j in 2..6 {
                populated[i * 8 + j] = true;
            }
        }
        let enc = g.enclosed(&populated);
        let count = enc.iter().filter(|&&e| e).count();
        assert_eq!(count, 4);
        assert!(enc[3 * 8 + 3] && !enc[2 * 8 + 3]);
    }

    #[test]
    fn csv_layout() {
        let g = BinGrid::symmetric(&["q"], &[1.0], 8).unwrap();
        let mut f = BinnedField::empty(g, vec!["h".into()], vec![0; 8]).unwrap();
        f.set(1, 0, Some(0.5), Some(0.1));
        f.counts[1] = 3;
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "centre_q,value_h,stderr_h,count");
        assert_eq!(lines[1], "-0.875,,,0");
        assert_eq!(lines[2], "-0.625,0.5,0.1,3");
    }
}
