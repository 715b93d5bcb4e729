use serde::{Deserialize, Serialize};

use crate::geometry::Grid;

/// Aggregated residual of one check over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check: String,
    pub grid: Vec<usize>,
    pub max: f64,
    pub mean: f64,
    pub argmax: Option<Vec<f64>>,
    pub included: usize,
    pub excluded: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    /// Builds a report from per-node samples in grid order; `None` marks an
    /// excluded node. Non-finite samples count as infinite residuals.
    pub fn from_samples(check: &str, grid: &Grid, tolerance: f64, samples: &[Option<f64>]) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut argmax = None;
        let mut included = 0;
        for (i, s) in samples.iter().enumerate() {
            let Some(v) = s else { continue };
            let v = if v.is_finite() { v.abs() } else { f64::INFINITY };
            included += 1;
            sum += v;
            if argmax.is_none() || v > max {
                max = v;
                argmax = Some(grid.point(i));
            }
        }
        let mean = if included > 0 { sum / included as f64 } else { 0.0 };
        Self {
            check: check.to_string(),
            grid: grid.counts().to_vec(),
            max,
            mean: mean.min(max),
            argmax,
            included,
            excluded: samples.len() - included,
            tolerance,
            pass: included > 0 && max < tolerance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, GridSpec};

    #[test]
    fn aggregates_in_order() {
        let chart = Chart::bounded(&["x", "y"], &[[0.0, 1.0], [0.0, 1.0]]).unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(2, 2)).unwrap();
        let r = ResidualReport::from_samples("t", &grid, 0.5, &[Some(0.1), None, Some(-0.3), Some(0.2)]);
        assert_eq!(r.max, 0.3);
        assert!((r.mean - 0.2).abs() < 1e-15);
        assert_eq!(r.argmax, Some(vec![1.0, 0.0]));
        assert_eq!((r.included, r.excluded), (3, 1));
        assert!(r.pass);
        let r = ResidualReport::from_samples("t", &grid, 0.5, &[None, None, Some(f64::NAN), None]);
        assert!(!r.pass && r.max.is_infinite());
        let r = ResidualReport::from_samples("t", &grid, 0.5, &[None; 4]);
        assert!(!r.pass);
    }
}
