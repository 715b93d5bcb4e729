use serde::{Deserialize, Serialize};

use super::eigen::EigenStructure;
use super::lemmas::{grid_diagnostics, PointDiagnostics};
use super::report::ResidualReport;
use crate::error::Result;
use crate::geometry::{MetricField, SymTensorField};
use crate::tolerances::Tolerances;

pub const CONDITION_NAMES: [&str; 4] = [
    "trace_constant_on_lambda_leaves",
    "mu_constant_on_lambda_leaves",
    "mu_lines_geodesic",
    "mu_field_gradient",
];

/// The four equivalent conditions, each judged against `tol_cond`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub reports: Vec<ResidualReport>,
    pub booleans: [bool; 4],
    /// All four booleans agree.
    pub agree: bool,
}

impl ConditionReport {
    pub fn from_diagnostics(eig: &EigenStructure, diag: &[Option<PointDiagnostics>], tol: f64) -> Self {
        let reports: Vec<ResidualReport> = (0..4)
            .map(|c| {
                let samples: Vec<Option<f64>> = diag.iter().map(|d| d.map(|d| d.conditions[c])).collect();
                ResidualReport::from_samples(CONDITION_NAMES[c], &eig.grid, tol, &samples)
            })
            .collect();
        let booleans = [reports[0].pass, reports[1].pass, reports[2].pass, reports[3].pass];
        let agree = booleans.iter().all(|b| *b == booleans[0]);
        Self {
            reports,
            booleans,
            agree,
        }
    }

    pub fn all_true(&self) -> bool {
        self.booleans.iter().all(|b| *b)
    }

    pub fn all_false(&self) -> bool {
        self.booleans.iter().all(|b| !*b)
    }
}

pub fn char_conditions(
    a: &SymTensorField,
    g: &MetricField,
    eig: &EigenStructure,
    tol: &Tolerances,
) -> Result<ConditionReport> {
    let diag = grid_diagnostics(a, g, eig, tol)?;
    Ok(ConditionReport::from_diagnostics(eig, &diag, tol.cond))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codazzi::eigen_structure;
    use crate::geometry::{Chart, Grid, GridSpec};

    #[test]
    fn parallel_split_satisfies_everything() {
        let chart = Chart::bounded(&["t", "x", "y"], &[[-1.0, 1.0]; 3]).unwrap();
        let g = MetricField::euclidean(&chart);
        let a = SymTensorField::parse(&chart, &[(0, 0, "2"), (1, 1, "1"), (2, 2, "1")]).unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(3, 3)).unwrap();
        let tol = Tolerances::default();
        let eig = eigen_structure(&a, &g, &grid, tol.cluster).unwrap();
        let c = char_conditions(&a, &g, &eig, &tol).unwrap();
        assert!(c.all_true() && c.agree, "{c:?}");
    }

    #[test]
    fn torus_fails_everything() {
        let chart = Chart::new(&["t", "x", "y"], &[[0.0, std::f64::consts::TAU]; 3], &[true; 3]).unwrap();
        let mu = "0.5*sin(x)*cos(y)";
        let g = MetricField::parse(&chart, &[(0, 0, &format!("(1 - {mu})^(-2)")), (1, 1, "1"), (2, 2, "1")]).unwrap();
        let a = SymTensorField::parse(
            &chart,
            &[(0, 0, &format!("{mu}*(1 - {mu})^(-2)")), (1, 1, "1"), (2, 2, "1")],
        )
        .unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(3, 5)).unwrap();
        let tol = Tolerances::default();
        let eig = eigen_structure(&a, &g, &grid, tol.cluster).unwrap();
        let c = char_conditions(&a, &g, &eig, &tol).unwrap();
        assert!(c.all_false() && c.agree, "{c:?}");
    }
}
