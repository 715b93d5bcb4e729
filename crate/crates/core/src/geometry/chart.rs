use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single coordinate chart: named axes, a closed box, and per-axis
/// periodic identification (period = interval length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    coord_names: Vec<String>,
    domain: Vec<[f64; 2]>,
    periodic: Vec<bool>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(
        coord_names: &[S],
        domain: &[[f64; 2]],
        periodic: &[bool],
    ) -> Result<Self> {
        let n = coord_names.len();
        if n < 2 {
            return Err(Error::InvalidChart("dimension must be at least 2".into()));
        }
        if domain.len() != n || periodic.len() != n {
            return Err(Error::InvalidChart(format!(
                "{n} names but {} intervals and {} periodicity flags",
                domain.len(),
                periodic.len()
            )));
        }
        for (name, [lo, hi]) in coord_names.iter().zip(domain) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidChart(format!(
                    "axis `{}` has empty interval [{lo}, {hi}]",
                    name.as_ref()
                )));
            }
        }
        let names: Vec<String> = coord_names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidChart(format!("duplicate coordinate `{a}`")));
            }
        }
        Ok(Self {
            coord_names: names,
            domain: domain.to_vec(),
            periodic: periodic.to_vec(),
        })
    }

    /// Non-periodic box.
    pub fn bounded<S: AsRef<str>>(coord_names: &[S], domain: &[[f64; 2]]) -> Result<Self> {
        Self::new(coord_names, domain, &vec![false; coord_names.len()])
    }

    pub fn dim(&self) -> usize {
        self.coord_names.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn axis(&self, name: &str) -> Option<usize> {
        self.coord_names.iter().position(|n| n == name)
    }

    pub fn period(&self, axis: usize) -> Option<f64> {
        let [lo, hi] = self.domain[axis];
        self.periodic[axis].then_some(hi - lo)
    }

    /// Euclidean length of the box diagonal in coordinate units.
    pub fn diameter(&self) -> f64 {
        self.domain
            .iter()
            .map(|[lo, hi]| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Reduces periodic coordinates into `[lo, hi)`.
    pub fn wrap(&self, p: &mut [f64]) {
        for (axis, x) in p.iter_mut().enumerate() {
            if let Some(period) = self.period(axis) {
                let lo = self.domain[axis][0];
                *x = lo + (*x - lo).rem_euclid(period);
            }
        }
    }

    /// Whether `p` lies in the box; periodic axes always contain the point.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().enumerate().all(|(axis, x)| {
                let [lo, hi] = self.domain[axis];
                self.periodic[axis] || (*x >= lo && *x <= hi)
            })
    }
}

/// Per-axis sample counts plus an inset from non-periodic box faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    #[serde(default)]
    pub margin: f64,
}

impl GridSpec {
    pub fn uniform(dim: usize, count: usize) -> Self {
        Self {
            counts: vec![count; dim],
            margin: 0.0,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }
}

/// Uniform tensor-product grid over a chart. Nodes are numbered row-major
/// with the last axis fastest.
#[derive(Debug, Clone)]
pub struct Grid {
    chart: Chart,
    spec: GridSpec,
    samples: Vec<Vec<f64>>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(chart: &Chart, spec: &GridSpec) -> Result<Self> {
        let n = chart.dim();
        if spec.counts.len() != n {
            return Err(Error::Dimension(format!(
                "grid has {} axes, chart has {n}",
                spec.counts.len()
            )));
        }
        if !(spec.margin >= 0.0) {
            return Err(Error::GridTooCoarse("margin must be non-negative".into()));
        }
        let mut samples = Vec::with_capacity(n);
        let mut spacing = Vec::with_capacity(n);
        for axis in 0..n {
            let count = spec.counts[axis];
            let [lo, hi] = chart.domain()[axis];
            if chart.periodic()[axis] {
                if count < 1 {
                    return Err(Error::GridTooCoarse(format!("axis {axis} has no samples")));
                }
                let h = (hi - lo) / count as f64;
                samples.push((0..count).map(|i| lo + i as f64 * h).collect());
                spacing.push(h);
            } else {
                if count < 2 {
                    return Err(Error::GridTooCoarse(format!(
                        "non-periodic axis {axis} needs at least 2 samples"
                    )));
                }
                let (a, b) = (lo + spec.margin, hi - spec.margin);
                if !(a < b) {
                    return Err(Error::GridTooCoarse(format!(
                        "margin {} empties axis {axis}",
                        spec.margin
                    )));
                }
                let h = (b - a) / (count - 1) as f64;
                samples.push(
                    (0..count)
                        .map(|i| if i + 1 == count { b } else { a + i as f64 * h })
                        .collect(),
                );
                spacing.push(h);
            }
        }
        let mut strides = vec![1; n];
        for axis in (0..n.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * spec.counts[axis + 1];
        }
        Ok(Self {
            chart: chart.clone(),
            spec: spec.clone(),
            samples,
            spacing,
            strides,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn counts(&self) -> &[usize] {
        &self.spec.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn samples(&self, axis: usize) -> &[f64] {
        &self.samples[axis]
    }

    pub fn len(&self) -> usize {
        self.spec.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, linear: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.spec.counts)
            .map(|(s, c)| (linear / s) % c)
            .collect()
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, linear: usize) -> Vec<f64> {
        self.multi_index(linear)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.samples[axis][i])
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Node `offset` steps away along `axis`, wrapping on periodic axes.
    pub fn neighbor(&self, linear: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut multi = self.multi_index(linear);
        let count = self.spec.counts[axis] as isize;
        let moved = multi[axis] as isize + offset;
        let idx = if self.chart.periodic()[axis] {
            moved.rem_euclid(count)
        } else if (0..count).contains(&moved) {
            moved
        } else {
            return None;
        };
        multi[axis] = idx as usize;
        Some(self.linear_index(&multi))
    }

    /// Node closest to `p` (periodic distance on periodic axes).
    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|axis| {
                let samples = &self.samples[axis];
                let period = self.chart.period(axis);
                let dist = |s: f64| {
                    let d = (s - p[axis]).abs();
                    period.map_or(d, |per| d.rem_euclid(per).min(per - d.rem_euclid(per)))
                };
                (0..samples.len())
                    .min_by(|&a, &b| dist(samples[a]).total_cmp(&dist(samples[b])))
                    .unwrap_or(0)
            })
            .collect();
        self.linear_index(&multi)
    }
}
