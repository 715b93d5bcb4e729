//! Named metric/tensor pairs: the two-eigenvalue family
//! `g = (λ-μ)^-2 dt^2 + λ(dx^2 + dy^2)`, `A = μ g_tt dt^2 + λ^2(dx^2 + dy^2)`,
//! the counterexamples built from it, baselines, and the closed forms of
//! `μ` admitted by the warping analysis.
//!
//! Every instance stores `A` as a (0,2) tensor.

mod forms;

pub use forms::{characteristics_residual, mu_form, random_mu_form, MuParams, G_VAR};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::codazzi::ResidualReport;
use crate::geometry::{pullback_metric, Chart, CoordinateMap, Grid, GridSpec, MetricField, SymTensorField};

/// Samples per axis used to check `λ - μ != 0` on a family's box.
pub const COLLISION_GRID: usize = 11;

/// One member of the two-eigenvalue family on a box.
#[derive(Debug, Clone)]
pub struct FamilyInstance {
    pub lambda: f64,
    pub mu: ScalarExpr,
    pub g: MetricField,
    pub a: SymTensorField,
}

impl FamilyInstance {
    pub fn chart(&self) -> &Chart {
        self.g.chart()
    }
}

/// Builds the family member for constant `lambda > 0` and `mu` on `chart`.
/// The first coordinate plays the role of `t`.
pub fn build_family(lambda: f64, mu: &ScalarExpr, chart: &Chart) -> Result<FamilyInstance> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::BadParams(format!("lambda must be positive, got {lambda}")));
    }
    let names = chart.coord_names();
    let mu = mu.rebind(names)?;
    let grid = Grid::new(chart, &GridSpec::uniform(chart.dim(), COLLISION_GRID))?;
    for p in grid.points() {
        let gap = lambda - mu.eval(&p)?;
        if gap.abs() < crate::tolerances::TOL_COLLISION {
            return Err(Error::EigenvalueCollision { point: p, gap: gap.abs() });
        }
    }
    let lam = ScalarExpr::constant(lambda, names);
    let gap = lam.clone() - mu.clone();
    let g_tt = gap.powf(-2.0);
    let n = chart.dim();
    let mut gd = vec![g_tt.clone()];
    let mut ad = vec![mu.clone() * g_tt];
    for _ in 1..n {
        gd.push(lam.clone());
        ad.push(ScalarExpr::constant(lambda * lambda, names));
    }
    Ok(FamilyInstance {
        lambda,
        mu,
        g: MetricField::diagonal(chart, gd)?,
        a: SymTensorField::diagonal(chart, ad)?,
    })
}

/// Identifiers accepted by [`named_example`].
pub const EXAMPLE_IDS: [&str; 7] = [
    "torus",
    "inconsistent_warp",
    "flat",
    "warped_consistent",
    "time_dependent",
    "xy_family",
    "flat_split",
];

/// Instances with two eigenvalue functions used for the condition battery.
pub const BATTERY_IDS: [&str; 6] = [
    "flat_split",
    "torus",
    "inconsistent_warp",
    "warped_consistent",
    "time_dependent",
    "xy_family",
];

/// A fully configured metric/tensor pair.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub summary: &'static str,
    pub g: MetricField,
    pub a: SymTensorField,
    pub family: Option<FamilyInstance>,
    /// Grid for residual and eigen sweeps.
    pub grid: GridSpec,
    /// Grid for warped-product detection.
    pub detect_grid: GridSpec,
    pub probe: Vec<f64>,
}

/// Summary of an example as it appears in reports.
#[derive(Debug, Clone, Serialize)]
pub struct ExampleInfo {
    pub id: String,
    pub summary: String,
    pub chart: Chart,
    pub lambda: Option<f64>,
    pub mu: Option<String>,
    pub probe: Vec<f64>,
}

impl Example {
    pub fn chart(&self) -> &Chart {
        self.g.chart()
    }

    pub fn info(&self) -> ExampleInfo {
        ExampleInfo {
            id: self.id.clone(),
            summary: self.summary.to_string(),
            chart: self.chart().clone(),
            lambda: self.family.as_ref().map(|f| f.lambda),
            mu: self.family.as_ref().map(|f| f.mu.to_string()),
            probe: self.probe.clone(),
        }
    }

    fn from_family(id: &str, summary: &'static str, fam: FamilyInstance, counts: [usize; 2], probe: Vec<f64>) -> Self {
        let n = fam.chart().dim();
        Self {
            id: id.to_string(),
            summary,
            g: fam.g.clone(),
            a: fam.a.clone(),
            family: Some(fam),
            grid: GridSpec::uniform(n, counts[0]),
            detect_grid: GridSpec::uniform(n, counts[1]),
            probe,
        }
    }
}

const TXY: [&str; 3] = ["t", "x", "y"];

fn family(lambda: f64, mu: &str, chart: &Chart) -> Result<FamilyInstance> {
    build_family(lambda, &ScalarExpr::parse(mu, chart.coord_names())?, chart)
}

/// Looks up a named example.
pub fn named_example(id: &str) -> Result<Example> {
    let two_pi = 2.0 * std::f64::consts::PI;
    match id {
        "torus" => {
            let chart = Chart::new(&TXY, &[[0.0, two_pi]; 3], &[true; 3])?;
            let fam = family(1.0, "0.5*sin(x)*cos(y)", &chart)?;
            Ok(Example::from_family(
                id,
                "family with mu = sin(x)cos(y)/2 on the 3-torus",
                fam,
                [11, 9],
                vec![0.0; 3],
            ))
        }
        "inconsistent_warp" => {
            let chart = Chart::bounded(&TXY, &[[0.0, 1.0], [0.5, 1.5], [0.5, 1.5]])?;
            let fam = family(1.0, "1 + y/x^2", &chart)?;
            Ok(Example::from_family(
                id,
                "g = x^4/y^2 dt^2 + dx^2 + dy^2, warped in the polar radius only",
                fam,
                [7, 7],
                vec![0.0, 1.0, 1.0],
            ))
        }
        "flat" => {
            let chart = Chart::bounded(&TXY, &[[-1.0, 1.0]; 3])?;
            let g = MetricField::euclidean(&chart);
            Ok(Example {
                id: id.into(),
                summary: "Euclidean metric with A = g",
                a: SymTensorField::from_metric(&g),
                g,
                family: None,
                grid: GridSpec::uniform(3, 7),
                detect_grid: GridSpec::uniform(3, 7),
                probe: vec![0.0; 3],
            })
        }
        "flat_split" => {
            let chart = Chart::bounded(&TXY, &[[-1.0, 1.0]; 3])?;
            let g = MetricField::euclidean(&chart);
            let a = SymTensorField::parse(&chart, &[(0, 0, "2"), (1, 1, "1"), (2, 2, "1")])?;
            Ok(Example {
                id: id.into(),
                summary: "Euclidean metric with A = g + dt^2",
                g,
                a,
                family: None,
                grid: GridSpec::uniform(3, 7),
                detect_grid: GridSpec::uniform(3, 7),
                probe: vec![0.0; 3],
            })
        }
        "warped_consistent" => {
            let chart = Chart::bounded(&TXY, &[[0.0, 1.0]; 3])?;
            let g = MetricField::parse(&chart, &[(0, 0, "1"), (1, 1, "exp(2*t)"), (2, 2, "exp(2*t)")])?;
            let a = SymTensorField::parse(&chart, &[(0, 0, "2*exp(t)"), (1, 1, "exp(3*t)"), (2, 2, "exp(3*t)")])?;
            Ok(Example {
                id: id.into(),
                summary: "dt^2 + e^(2t)(dx^2 + dy^2) with eigenvalues 2e^t and e^t",
                g,
                a,
                family: None,
                grid: GridSpec::uniform(3, 7),
                detect_grid: GridSpec::uniform(3, 7),
                probe: vec![0.5; 3],
            })
        }
        "time_dependent" => {
            let chart = Chart::bounded(&TXY, &[[0.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]])?;
            let fam = family(3.0, "1 + t", &chart)?;
            Ok(Example::from_family(id, "family with lambda = 3, mu = 1 + t", fam, [7, 7], vec![0.5, 0.0, 0.0]))
        }
        "xy_family" => {
            let chart = Chart::bounded(&TXY, &[[0.0, 1.0], [-0.5, 0.5], [-0.5, 0.5]])?;
            let fam = family(1.0, "x*y", &chart)?;
            Ok(Example::from_family(id, "family with lambda = 1, mu = xy", fam, [7, 7], vec![0.5, 0.0, 0.0]))
        }
        other => Err(Error::Config(format!(
            "unknown example `{other}`; known: {}",
            EXAMPLE_IDS.join(", ")
        ))),
    }
}

/// Pulls the `inconsistent_warp` metric back under
/// `(t, r, theta) -> (t, r cos theta, r sin theta)` and compares with
/// `dr^2 + r^2 (cos^4 theta / sin^2 theta dt^2 + dtheta^2)` on an
/// `n x n` grid of `(r, theta)` at fixed `t`. The reported value is the
/// largest componentwise difference.
pub fn polar_pullback_residual(n: usize, tol: f64) -> Result<ResidualReport> {
    let ex = named_example("inconsistent_warp")?;
    let source = Chart::bounded(&["t", "r", "theta"], &[[0.0, 1.0], [0.8, 1.8], [0.3, 1.2]])?;
    let phi = CoordinateMap::parse(&source, &["t", "r*cos(theta)", "r*sin(theta)"])?;
    let plane = Chart::bounded(&["r", "theta"], &source.domain()[1..])?;
    let grid = Grid::new(&plane, &GridSpec::uniform(2, n))?;
    let samples = grid
        .points()
        .map(|q| {
            let (r, th) = (q[0], q[1]);
            let pb = pullback_metric(&phi, &ex.g, &[0.5, r, th])?;
            let mut expect = nalgebra::DMatrix::zeros(3, 3);
            expect[(0, 0)] = r * r * th.cos().powi(4) / th.sin().powi(2);
            expect[(1, 1)] = 1.0;
            expect[(2, 2)] = r * r;
            Ok(Some((pb - expect).amax()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples("polar_pullback", &grid, tol, &samples))
}
