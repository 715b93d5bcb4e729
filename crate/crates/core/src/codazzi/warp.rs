use rayon::prelude::*;
use serde::Serialize;

use super::conditions::{char_conditions, ConditionReport};
use super::eigen::{two_cluster_at, EigenStructure};
use super::lemmas::richardson;
use super::report::ResidualReport;
use crate::error::{Error, Result};
use crate::geometry::{MetricField, SymTensorField};
use crate::tolerances::Tolerances;

/// The base coordinate. The simple eigenvector must be aligned with it.
pub const BASE_AXIS: usize = 0;

/// Warp rate, its integral along the base, and the rescaled fiber metric.
#[derive(Debug, Clone, Serialize)]
pub struct WarpExtraction {
    pub conditions: ConditionReport,
    /// `max |g(X, d_i)| / sqrt(g_ii)` over fiber axes `i`.
    pub alignment: ResidualReport,
    /// `eta = (mu - lambda)^-1 d_t lambda` per node.
    pub eta: Vec<Option<f64>>,
    pub eta_range: [f64; 2],
    /// `|d_i eta|` over fiber axes.
    pub eta_leaf: ResidualReport,
    /// `q = int 2 eta dt` from the first node of each base line.
    pub q: Vec<Option<f64>>,
    /// `e^-q g_ij` over fiber indices `i <= j`, packed row by row.
    pub h: Vec<Option<Vec<f64>>>,
    /// `|d_t (e^-q g_ij)| = e^-q |d_t g_ij - 2 eta g_ij|`.
    pub warp: ResidualReport,
    /// `eta` vanishes: the warping function is constant.
    pub trivial: bool,
}

fn eta_at(a: &SymTensorField, g: &MetricField, q: &[f64], tol: &Tolerances) -> Result<f64> {
    let lam = |p: &[f64]| two_cluster_at(a, g, p, tol.cluster).map(|t| vec![t.lambda]);
    let dl = richardson(&lam, q, BASE_AXIS, tol.fd_step)?[0];
    let t = two_cluster_at(a, g, q, tol.cluster)?;
    Ok(dl / (t.mu - t.lambda))
}

/// Requires all four conditions to hold and the `mu` eigenvector to point
/// along the base axis.
pub fn eta_and_warp_extract(
    a: &SymTensorField,
    g: &MetricField,
    eig: &EigenStructure,
    tol: &Tolerances,
) -> Result<WarpExtraction> {
    let conditions = char_conditions(a, g, eig, tol)?;
    if !conditions.all_true() {
        let failing: Vec<String> = conditions
            .reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{} (max {:e})", r.check, r.max))
            .collect();
        return Err(Error::NotWarpedEvidence(failing.join(", ")));
    }
    let grid = &eig.grid;
    let n = grid.dim();
    let fiber: Vec<usize> = (0..n).filter(|i| *i != BASE_AXIS).collect();

    let deviation: Vec<Option<f64>> = (0..grid.len())
        .map(|i| {
            let x = eig.points[i].as_ref()?.mu_vector()?;
            let m = g.at(&grid.point(i)).ok()?;
            let gx = m.lower(&x);
            Some(fiber.iter().map(|&k| gx[k].abs() / m.g[(k, k)].sqrt()).fold(0.0, f64::max))
        })
        .collect();
    let alignment = ResidualReport::from_samples("alignment", grid, tol.warp, &deviation);
    if !alignment.pass {
        return Err(Error::MisalignedFrame {
            point: alignment.argmax.clone().unwrap_or_default(),
            deviation: alignment.max,
        });
    }

    let eta: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            eig.points[i].as_ref()?;
            eta_at(a, g, &grid.point(i), tol).ok()
        })
        .collect();
    let leaf: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            eta[i]?;
            let p = grid.point(i);
            let f = |q: &[f64]| eta_at(a, g, q, tol).map(|e| vec![e]);
            let mut worst = 0.0f64;
            for &k in &fiber {
                worst = worst.max(richardson(&f, &p, k, tol.fd_step).ok()?[0].abs());
            }
            Some(worst)
        })
        .collect();
    let eta_leaf = ResidualReport::from_samples("eta_leaf_constant", grid, tol.warp, &leaf);

    let mut q = vec![None; grid.len()];
    for i in 0..grid.len() {
        let idx = grid.multi_index(i);
        if idx[BASE_AXIS] == 0 {
            q[i] = eta[i].map(|_| 0.0);
            continue;
        }
        let prev = grid.neighbor(i, BASE_AXIS, -1).expect("interior along base");
        let ts = grid.samples(BASE_AXIS);
        let dt = ts[idx[BASE_AXIS]] - ts[idx[BASE_AXIS] - 1];
        q[i] = match (q[prev], eta[prev], eta[i]) {
            (Some(qp), Some(e0), Some(e1)) => Some(qp + dt * (e0 + e1)),
            _ => None,
        };
    }

    let mut h = vec![None; grid.len()];
    let mut warp_samples = vec![None; grid.len()];
    for i in 0..grid.len() {
        let (Some(qi), Some(ei)) = (q[i], eta[i]) else { continue };
        let p = grid.point(i);
        let Ok(m) = g.at(&p) else { continue };
        let scale = (-qi).exp();
        let mut packed = Vec::new();
        let mut worst = 0.0f64;
        for (ii, &r) in fiber.iter().enumerate() {
            for &c in &fiber[ii..] {
                packed.push(scale * m.g[(r, c)]);
                let d = m.dg[BASE_AXIS][(r, c)] - 2.0 * ei * m.g[(r, c)];
                worst = worst.max(scale * d.abs());
            }
        }
        h[i] = Some(packed);
        warp_samples[i] = Some(worst);
    }
    let warp = ResidualReport::from_samples("warp", grid, tol.warp, &warp_samples);
    let values: Vec<f64> = eta.iter().flatten().copied().collect();
    let eta_range = [
        values.iter().copied().fold(f64::INFINITY, f64::min),
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ];
    let trivial = values.iter().all(|e| e.abs() < tol.warp);
    Ok(WarpExtraction {
        conditions,
        alignment,
        eta,
        eta_range,
        eta_leaf,
        q,
        h,
        warp,
        trivial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codazzi::eigen_structure;
    use crate::geometry::{Chart, Grid, GridSpec};

    fn run(g: &MetricField, a: &SymTensorField) -> Result<WarpExtraction> {
        let tol = Tolerances::default();
        let grid = Grid::new(g.chart(), &GridSpec::uniform(g.dim(), 4)).unwrap();
        let eig = eigen_structure(a, g, &grid, tol.cluster).unwrap();
        eta_and_warp_extract(a, g, &eig, &tol)
    }

    #[test]
    fn exponential_warp() {
        let chart = Chart::bounded(&["t", "x", "y"], &[[0.0, 1.0]; 3]).unwrap();
        let g = MetricField::parse(&chart, &[(0, 0, "1"), (1, 1, "exp(2*t)"), (2, 2, "exp(2*t)")]).unwrap();
        let a = SymTensorField::parse(&chart, &[(0, 0, "2*exp(t)"), (1, 1, "exp(3*t)"), (2, 2, "exp(3*t)")]).unwrap();
        let w = run(&g, &a).unwrap();
        assert!((w.eta_range[0] - 1.0).abs() < 1e-8 && (w.eta_range[1] - 1.0).abs() < 1e-8);
        assert!(w.warp.pass && w.eta_leaf.pass && !w.trivial);
        let last = w.q.len() - 1;
        assert!((w.q[last].unwrap() - 2.0).abs() < 1e-8);
        assert!(w.h[last].as_ref().unwrap().iter().zip([1.0, 0.0, 1.0]).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn constant_lambda_is_trivial() {
        let chart = Chart::bounded(&["t", "x", "y"], &[[0.0, 1.0]; 3]).unwrap();
        let g = MetricField::parse(&chart, &[(0, 0, "(3 - (1 + t))^(-2)"), (1, 1, "3"), (2, 2, "3")]).unwrap();
        let a = SymTensorField::parse(&chart, &[(0, 0, "(1 + t)*(3 - (1 + t))^(-2)"), (1, 1, "9"), (2, 2, "9")])
            .unwrap();
        let w = run(&g, &a).unwrap();
        assert!(w.trivial && w.warp.pass);
        assert!(w.q.iter().flatten().all(|q| q.abs() < 1e-8));
    }

    #[test]
    fn misaligned_frame_is_reported() {
        // the parallel split A = g + dx (x) dx puts the simple direction along x
        let chart = Chart::bounded(&["t", "x", "y"], &[[0.0, 1.0]; 3]).unwrap();
        let g = MetricField::euclidean(&chart);
        let a = SymTensorField::parse(&chart, &[(0, 0, "1"), (1, 1, "2"), (2, 2, "1")]).unwrap();
        assert!(matches!(run(&g, &a), Err(Error::MisalignedFrame { .. })));
    }

    #[test]
    fn failing_conditions_are_not_warped_evidence() {
        let chart = Chart::bounded(&["t", "x", "y"], &[[0.0, 1.0], [-0.5, 0.5], [-0.5, 0.5]]).unwrap();
        let g = MetricField::parse(&chart, &[(0, 0, "(1 - x*y)^(-2)"), (1, 1, "1"), (2, 2, "1")]).unwrap();
        let a = SymTensorField::parse(&chart, &[(0, 0, "x*y*(1 - x*y)^(-2)"), (1, 1, "1"), (2, 2, "1")]).unwrap();
        assert!(matches!(run(&g, &a), Err(Error::NotWarpedEvidence(_))));
    }
}
