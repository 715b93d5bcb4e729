//! Residuals of the eigendistribution identities and of the four
//! characterizing conditions.
//!
//! Eigen-data has no closed form for a general tensor, so derivatives of
//! `lambda`, `mu` and of eigenvector fields come from central differences of
//! per-point eigensolves, Richardson-extrapolated over steps `h` and `h/2`.
//! Vector fields are extended off a node `p` in a way that is invariant under
//! rotations inside the `lambda` eigenspace:
//!
//! - `X(q)` is the unit `mu` eigenvector at `q`, signed to agree with `X(p)`;
//! - `Y_a(q) = E_a - X(q) g_q(X(q), E_a)`, the `lambda`-projection of the
//!   fixed vector `E_a`, where `E_a` is an orthonormal `lambda` frame at `p`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{two_cluster_at, EigenStructure, TwoCluster};
use super::report::ResidualReport;
use super::residual::check_charts;
use crate::error::Result;
use crate::geometry::connection::covariant_derivative_raw;
use crate::geometry::{Christoffel, MetricAt, MetricField, SymTensorField};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    /// `A nabla_Y X = lambda nabla_Y X + (D_Y lambda) X - g(X, Y) grad lambda`.
    Same,
    /// `D_Y lambda = 0` for `Y` in the `lambda` eigenspace.
    Constant,
    /// The `lambda` eigendistribution is closed under brackets.
    Integrable,
    /// `D_Y mu g(X, X) = (lambda - mu) g(nabla_X Y, X)`.
    Derivative,
}

impl Lemma {
    pub const ALL: [Lemma; 4] = [Lemma::Same, Lemma::Constant, Lemma::Integrable, Lemma::Derivative];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::Same => "same",
            Lemma::Constant => "constant",
            Lemma::Integrable => "integrable",
            Lemma::Derivative => "derivative",
        }
    }
}

impl std::str::FromStr for Lemma {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| crate::Error::Config(format!("unknown lemma `{s}`")))
    }
}

/// All pointwise residuals at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDiagnostics {
    pub same: f64,
    pub constant: f64,
    pub integrable: f64,
    pub derivative: f64,
    /// Conditions 1 to 4: trace derivative along the `lambda` eigenspace,
    /// `D_Y mu`, `|nabla_X X|`, and asymmetry of `nabla X`.
    pub conditions: [f64; 4],
}

impl PointDiagnostics {
    pub fn lemma(&self, lemma: Lemma) -> f64 {
        match lemma {
            Lemma::Same => self.same,
            Lemma::Constant => self.constant,
            Lemma::Integrable => self.integrable,
            Lemma::Derivative => self.derivative,
        }
    }
}

struct Local {
    n: usize,
    metric: MetricAt,
    gamma: Christoffel,
    /// `g^-1 A`.
    shape: DMatrix<f64>,
    /// `g^-1 dA - g^-1 dg g^-1 A` traced, per coordinate.
    dtrace: Vec<f64>,
    data: TwoCluster,
    /// `d[k]` is the coordinate derivative of the sample vector along `k`.
    d: Vec<Vec<f64>>,
}

impl Local {
    fn grad_scalar(&self, slot: usize) -> Vec<f64> {
        self.d.iter().map(|dk| dk[slot]).collect()
    }

    fn directional(&self, slot: usize, u: &[f64]) -> f64 {
        u.iter().zip(&self.d).map(|(um, dm)| um * dm[slot]).sum()
    }

    /// `dv[m][k] = d_m V^k` for the vector stored at `offset`.
    fn field_jacobian(&self, offset: usize) -> Vec<Vec<f64>> {
        self.d.iter().map(|dm| dm[offset..offset + self.n].to_vec()).collect()
    }

    fn x_offset(&self) -> usize {
        2
    }

    fn y_offset(&self, a: usize) -> usize {
        2 + (a + 1) * self.n
    }

    fn nabla(&self, u: &[f64], v: &[f64], offset: usize) -> Vec<f64> {
        covariant_derivative_raw(&self.gamma, u, v, &self.field_jacobian(offset))
    }
}

/// `[lambda, mu, X, Y_1, ..., Y_{n-1}]` at `q`.
fn sample(
    a: &SymTensorField,
    g: &MetricField,
    q: &[f64],
    x_ref: &[f64],
    frame: &[Vec<f64>],
    cluster_tol: f64,
) -> Result<Vec<f64>> {
    let tc = two_cluster_at(a, g, q, cluster_tol)?;
    let m = g.at(q)?;
    let sign = if m.inner(&tc.x, x_ref) < 0.0 { -1.0 } else { 1.0 };
    let x: Vec<f64> = tc.x.iter().map(|c| sign * c).collect();
    let mut out = Vec::with_capacity(2 + x.len() * (frame.len() + 1));
    out.push(tc.lambda);
    out.push(tc.mu);
    out.extend_from_slice(&x);
    for e in frame {
        let c = m.inner(&x, e);
        out.extend(e.iter().zip(&x).map(|(ei, xi)| ei - c * xi));
    }
    Ok(out)
}

fn central<F>(f: &F, p: &[f64], axis: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut plus = p.to_vec();
    let mut minus = p.to_vec();
    plus[axis] += h;
    minus[axis] -= h;
    let (fp, fm) = (f(&plus)?, f(&minus)?);
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Richardson-extrapolated central difference of a vector-valued function.
pub fn richardson<F>(f: &F, p: &[f64], axis: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let coarse = central(f, p, axis, h)?;
    let fine = central(f, p, axis, h / 2.0)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

fn local(a: &SymTensorField, g: &MetricField, p: &[f64], x_ref: Option<&[f64]>, tol: &Tolerances) -> Result<Local> {
    let n = g.dim();
    let metric = g.at(p)?;
    let gamma = Christoffel::from_metric(&metric);
    let aj = a.jet(p)?;
    let shape = &metric.g_inv * &aj.value;
    let dtrace = (0..n)
        .map(|k| {
            let t = &metric.g_inv * (&aj.partials[k] - &metric.dg[k] * &shape);
            t.trace()
        })
        .collect();
    let mut data = two_cluster_at(a, g, p, tol.cluster)?;
    if let Some(r) = x_ref {
        if metric.inner(&data.x, r) < 0.0 {
            data.x.iter_mut().for_each(|c| *c = -*c);
        }
    }
    let f = |q: &[f64]| sample(a, g, q, &data.x, &data.frame, tol.cluster);
    let d = (0..n)
        .map(|k| richardson(&f, p, k, tol.fd_step))
        .collect::<Result<Vec<_>>>()?;
    Ok(Local {
        n,
        metric,
        gamma,
        shape,
        dtrace,
        data,
        d,
    })
}

/// Lemma and condition residuals at `p`. `x_ref` fixes the sign of the
/// simple eigenvector when given.
pub fn point_diagnostics(
    a: &SymTensorField,
    g: &MetricField,
    p: &[f64],
    x_ref: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<PointDiagnostics> {
    let l = local(a, g, p, x_ref, tol)?;
    let n = l.n;
    let (lambda, mu) = (l.data.lambda, l.data.mu);
    let x = &l.data.x;
    let frame = &l.data.frame;
    let m = &l.metric;
    let grad_lambda = m.raise(&l.grad_scalar(0));

    let mut same = 0.0f64;
    let mut constant = 0.0f64;
    let mut integrable = 0.0f64;
    let mut derivative = 0.0f64;
    let mut cond1 = 0.0f64;
    let mut cond2 = 0.0f64;
    let nabla_x_x = l.nabla(x, x, l.x_offset());
    for (ai, ya) in frame.iter().enumerate() {
        let dl = l.directional(0, ya);
        let dm = l.directional(1, ya);
        constant = constant.max(dl.abs());
        cond2 = cond2.max(dm.abs());
        cond1 = cond1.max(ya.iter().zip(&l.dtrace).map(|(u, d)| u * d).sum::<f64>().abs());
        for (bi, yb) in frame.iter().enumerate() {
            let nab = l.nabla(yb, ya, l.y_offset(ai));
            let snab = &l.shape * nalgebra::DVector::from_column_slice(&nab);
            let dlb = l.directional(0, yb);
            let gab = m.inner(ya, yb);
            let r: Vec<f64> = (0..n)
                .map(|k| snab[k] - lambda * nab[k] - dlb * ya[k] + gab * grad_lambda[k])
                .collect();
            same = same.max(m.norm(&r));
            if bi > ai {
                let nba = l.nabla(ya, yb, l.y_offset(bi));
                let bracket: Vec<f64> = nba.iter().zip(&nab).map(|(u, v)| u - v).collect();
                integrable = integrable.max(m.inner(&bracket, x).abs());
            }
        }
        let nxy = l.nabla(x, ya, l.y_offset(ai));
        derivative = derivative.max((dm - (lambda - mu) * m.inner(&nxy, x)).abs());
    }
    let cond3 = m.norm(&nabla_x_x);

    let mut full = vec![x.clone()];
    full.extend(frame.iter().cloned());
    let nab_x: Vec<Vec<f64>> = full.iter().map(|u| l.nabla(u, x, l.x_offset())).collect();
    let mut cond4 = 0.0f64;
    for u in 0..n {
        for v in (u + 1)..n {
            let buv = m.inner(&nab_x[u], &full[v]);
            let bvu = m.inner(&nab_x[v], &full[u]);
            cond4 = cond4.max((buv - bvu).abs());
        }
    }
    Ok(PointDiagnostics {
        same,
        constant,
        integrable,
        derivative,
        conditions: [cond1, cond2, cond3, cond4],
    })
}

/// Diagnostics at every included two-cluster node, in grid order.
pub fn grid_diagnostics(
    a: &SymTensorField,
    g: &MetricField,
    eig: &EigenStructure,
    tol: &Tolerances,
) -> Result<Vec<Option<PointDiagnostics>>> {
    check_charts(a, g, &eig.grid)?;
    Ok((0..eig.grid.len())
        .into_par_iter()
        .map(|i| {
            let pe = eig.points[i].as_ref()?;
            let x = pe.mu_vector()?;
            point_diagnostics(a, g, &eig.grid.point(i), Some(&x), tol).ok()
        })
        .collect())
}

pub fn lemma_report(lemma: Lemma, eig: &EigenStructure, diag: &[Option<PointDiagnostics>], tol: f64) -> ResidualReport {
    let samples: Vec<Option<f64>> = diag.iter().map(|d| d.map(|d| d.lemma(lemma))).collect();
    ResidualReport::from_samples(lemma.name(), &eig.grid, tol, &samples)
}

/// One identity over the grid; nodes without two-cluster structure are
/// excluded.
pub fn lemma_residual(
    lemma: Lemma,
    a: &SymTensorField,
    g: &MetricField,
    eig: &EigenStructure,
    tol: &Tolerances,
) -> Result<ResidualReport> {
    let diag = grid_diagnostics(a, g, eig, tol)?;
    Ok(lemma_report(lemma, eig, &diag, tol.lemma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codazzi::eigen_structure;
    use crate::geometry::{Chart, Grid, GridSpec};

    fn family(mu: &str, box_: [[f64; 2]; 3]) -> (MetricField, SymTensorField) {
        let chart = Chart::bounded(&["t", "x", "y"], &box_).unwrap();
        let g = MetricField::parse(&chart, &[(0, 0, &format!("(1 - ({mu}))^(-2)")), (1, 1, "1"), (2, 2, "1")]).unwrap();
        let a = SymTensorField::parse(
            &chart,
            &[(0, 0, &format!("({mu})*(1 - ({mu}))^(-2)")), (1, 1, "1"), (2, 2, "1")],
        )
        .unwrap();
        (g, a)
    }

    #[test]
    fn richardson_is_fourth_order() {
        let f = |q: &[f64]| Ok(vec![q[0].sin()]);
        let d = richardson(&f, &[0.3], 0, 1e-2).unwrap();
        assert!((d[0] - 0.3f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn xy_family_lemmas_hold_and_conditions_fail() {
        let (g, a) = family("x*y", [[0.0, 1.0], [-0.5, 0.5], [-0.5, 0.5]]);
        let tol = Tolerances::default();
        let d = point_diagnostics(&a, &g, &[0.3, 0.2, 0.4], None, &tol).unwrap();
        assert!(d.same < 1e-6 && d.constant < 1e-9 && d.integrable < 1e-9 && d.derivative < 1e-6, "{d:?}");
        // max over an orthonormal frame of span(d_x, d_y) of |d mu(E)| is within [|grad|/sqrt 2, |grad|]
        let grad = (0.2f64.powi(2) + 0.4f64.powi(2)).sqrt();
        assert!(d.conditions[1] <= grad + 1e-6 && d.conditions[1] >= grad / 2f64.sqrt() - 1e-6, "{d:?}");
        assert!(d.conditions.iter().all(|c| *c > 1e-3), "{d:?}");
    }

    #[test]
    fn time_dependent_family_satisfies_all_conditions() {
        let (g, a) = family("0.5*t", [[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]);
        let tol = Tolerances::default();
        let grid = Grid::new(g.chart(), &GridSpec::uniform(3, 3)).unwrap();
        let eig = eigen_structure(&a, &g, &grid, tol.cluster).unwrap();
        for d in grid_diagnostics(&a, &g, &eig, &tol).unwrap() {
            let d = d.unwrap();
            assert!(d.conditions.iter().all(|c| *c < 1e-7), "{d:?}");
        }
        for lemma in Lemma::ALL {
            assert!(lemma_residual(lemma, &a, &g, &eig, &tol).unwrap().pass);
        }
    }

    #[test]
    fn lemma_names_parse() {
        for l in Lemma::ALL {
            assert_eq!(l.name().parse::<Lemma>().unwrap(), l);
        }
        assert!("other".parse::<Lemma>().is_err());
    }
}
