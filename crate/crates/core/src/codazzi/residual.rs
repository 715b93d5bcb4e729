use rayon::prelude::*;

use super::report::ResidualReport;
use crate::error::{Error, Result};
use crate::geometry::{covariant_derivative_all, Grid, MetricField, SymTensorField};

/// `max_{i,j,k} |(nabla_i A)_jk - (nabla_j A)_ik|` at `p`.
pub fn codazzi_residual_at(a: &SymTensorField, g: &MetricField, p: &[f64]) -> Result<f64> {
    let d = covariant_derivative_all(a, g, p)?;
    let n = d.len();
    let mut r = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                r = r.max((d[i][(j, k)] - d[j][(i, k)]).abs());
            }
        }
    }
    Ok(r)
}

/// Codazzi identity residual over the grid. Nodes where the metric is
/// degenerate or an entry leaves its domain are excluded.
pub fn codazzi_residual(a: &SymTensorField, g: &MetricField, grid: &Grid, tol: f64) -> Result<ResidualReport> {
    check_charts(a, g, grid)?;
    let samples: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| codazzi_residual_at(a, g, &grid.point(i)).ok())
        .collect();
    Ok(ResidualReport::from_samples("codazzi", grid, tol, &samples))
}

pub(crate) fn check_charts(a: &SymTensorField, g: &MetricField, grid: &Grid) -> Result<()> {
    if a.chart() != g.chart() || grid.chart() != g.chart() {
        return Err(Error::Dimension("tensor, metric and grid must share one chart".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarExpr;
    use crate::geometry::{Chart, GridSpec};
    use std::f64::consts::TAU;

    fn torus() -> (MetricField, SymTensorField, Grid) {
        let chart = Chart::new(&["t", "x", "y"], &[[0.0, TAU]; 3], &[true; 3]).unwrap();
        let mu = "0.5*sin(x)*cos(y)";
        let g = MetricField::parse(&chart, &[(0, 0, &format!("(1 - {mu})^(-2)")), (1, 1, "1"), (2, 2, "1")]).unwrap();
        let a = SymTensorField::parse(
            &chart,
            &[(0, 0, &format!("({mu})*(1 - {mu})^(-2)")), (1, 1, "1"), (2, 2, "1")],
        )
        .unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(3, 5)).unwrap();
        (g, a, grid)
    }

    #[test]
    fn metric_is_codazzi() {
        let (g, _, grid) = torus();
        let r = codazzi_residual(&SymTensorField::from_metric(&g), &g, &grid, 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.included, 125);
    }

    #[test]
    fn family_is_codazzi_and_breaking_it_is_detected() {
        let (g, mut a, grid) = torus();
        assert!(codazzi_residual(&a, &g, &grid, 1e-8).unwrap().pass);
        let names = g.chart().coord_names().to_vec();
        a.field_mut()
            .set_entry(1, 1, ScalarExpr::parse("1 + 0.1*x", &names).unwrap())
            .unwrap();
        let r = codazzi_residual(&a, &g, &grid, 1e-8).unwrap();
        assert!(r.max > 1e-3, "{r:?}");
    }

    #[test]
    fn domain_failures_are_excluded() {
        let chart = Chart::bounded(&["x", "y"], &[[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let g = MetricField::parse(&chart, &[(0, 0, "1"), (1, 1, "1")]).unwrap();
        let a = SymTensorField::parse(&chart, &[(0, 0, "1/x"), (1, 1, "1")]).unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(2, 3)).unwrap();
        let r = codazzi_residual(&a, &g, &grid, 1e-8).unwrap();
        assert_eq!(r.excluded, 3);
    }
}
