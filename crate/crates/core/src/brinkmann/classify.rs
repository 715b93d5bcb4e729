use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::kernel::KernelBasis;
use super::system::{node_stencil, HessSystem};
use crate::codazzi::ResidualReport;
use crate::error::Result;
use crate::expr::ScalarExpr;
use crate::geometry::{hessian_scalar, Grid, MetricField};

/// Number of secondary probe nodes checked before declaring that no
/// non-trivial solution exists.
pub const SECONDARY_PROBES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    WarpedCandidate,
    NoNontrivialSolution,
    Inconclusive,
}

/// Least-squares quadratic in the chart coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct PolynomialFit {
    /// `(monomial, coefficient)`, e.g. `("x*y", 0.5)`.
    pub terms: Vec<(String, f64)>,
    pub rms_residual: f64,
}

/// A non-constant kernel element, normalized to unit RMS after removing
/// the mean of `f`.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub f: Vec<f64>,
    pub a: Vec<f64>,
    /// `|grad f|_g` at the probe node.
    pub gradient_norm: f64,
    /// Largest stencil residual of `Hess f - a g` over nodes and pairs.
    pub system_residual: f64,
    pub f_fit: PolynomialFit,
    pub a_fit: PolynomialFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct WarpVerdict {
    pub kernel_dimension: usize,
    pub probe: Vec<f64>,
    /// Grid node used for the probe.
    pub probe_node: Vec<f64>,
    /// Box diagonal used to make gradients dimensionless.
    pub diameter: f64,
    /// `|grad f|_g` at the probe for each normalized non-constant basis
    /// vector.
    pub gradient_norms: Vec<f64>,
    /// `diameter * max |grad f|_g` over unit-RMS kernel combinations.
    pub score: f64,
    pub grad_tol: f64,
    /// `(node, score)` for each secondary probe that was evaluated.
    pub secondary: Vec<(Vec<f64>, f64)>,
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
}

/// Extent of the sampled region: node span on bounded axes, period on
/// periodic ones.
pub fn grid_diameter(grid: &Grid) -> f64 {
    (0..grid.dim())
        .map(|axis| {
            let s = grid.samples(axis);
            let w = grid.chart().period(axis).unwrap_or(s[s.len() - 1] - s[0]);
            w * w
        })
        .sum::<f64>()
        .sqrt()
}

/// Stencil gradient of node values at `node`.
pub fn node_gradient(grid: &Grid, values: &[f64], node: usize) -> Vec<f64> {
    (0..grid.dim())
        .map(|k| node_stencil(grid, node, k, 1).iter().map(|(c, w)| w * values[*c]).sum())
        .collect()
}

struct Subspace {
    /// Mean-free, non-constant basis `f` vectors.
    f: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    /// Cholesky factor of the RMS Gram matrix.
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Subspace {
    fn new(basis: &KernelBasis) -> Option<Self> {
        let n = basis.f.first()?.len();
        let f: Vec<Vec<f64>> = basis.f[1..]
            .iter()
            .map(|v| {
                let mean = v.iter().sum::<f64>() / n as f64;
                v.iter().map(|x| x - mean).collect()
            })
            .collect();
        if f.is_empty() {
            return None;
        }
        let k = f.len();
        let s = DMatrix::from_fn(k, k, |i, j| f[i].iter().zip(&f[j]).map(|(x, y)| x * y).sum::<f64>() / n as f64);
        Some(Self {
            f,
            a: basis.a[1..].to_vec(),
            chol: nalgebra::Cholesky::new(s)?,
        })
    }

    /// Largest `|grad f|_g` over unit-RMS combinations at `node`, with the
    /// maximizing coefficients.
    fn best(&self, grid: &Grid, g: &MetricField, node: usize) -> Result<(f64, DVector<f64>)> {
        let m = g.at(&grid.point(node))?;
        let grads: Vec<DVector<f64>> = self
            .f
            .iter()
            .map(|v| DVector::from_vec(node_gradient(grid, v, node)))
            .collect();
        let k = grads.len();
        let gram = DMatrix::from_fn(k, k, |i, j| (grads[i].transpose() * &m.g_inv * &grads[j])[(0, 0)]);
        let l = self.chol.l();
        let li = l.clone().try_inverse().expect("Cholesky factor is invertible");
        let c = &li * gram * li.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = c.symmetric_eigen();
        let (top, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) });
        let w = eig.eigenvectors.column(top).into_owned();
        let coef = li.transpose() * w;
        Ok((eig.eigenvalues[top].max(0.0).sqrt(), coef))
    }

    fn single_norms(&self, grid: &Grid, g: &MetricField, node: usize) -> Result<Vec<f64>> {
        let m = g.at(&grid.point(node))?;
        let s = self.chol.l() * self.chol.l().transpose();
        Ok(self
            .f
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let d = node_gradient(grid, v, node);
                m.norm(&m.raise(&d)) / s[(j, j)].sqrt()
            })
            .collect())
    }
}

/// Decides between a warped candidate, no non-trivial solution, or an
/// inconclusive result from the kernel of `Hess f = a g`.
pub fn classify_warped(
    basis: &KernelBasis,
    sys: &HessSystem,
    g: &MetricField,
    probe: &[f64],
    grad_tol: f64,
    seed: u64,
) -> Result<WarpVerdict> {
    let grid = &sys.grid;
    let node = grid.nearest_node(probe);
    let diameter = grid_diameter(grid);
    let mut out = WarpVerdict {
        kernel_dimension: basis.dimension(),
        probe: probe.to_vec(),
        probe_node: grid.point(node),
        diameter,
        gradient_norms: Vec::new(),
        score: 0.0,
        grad_tol,
        secondary: Vec::new(),
        verdict: Verdict::NoNontrivialSolution,
        certificate: None,
    };
    let Some(sub) = Subspace::new(basis) else {
        return Ok(out);
    };
    out.gradient_norms = sub.single_norms(grid, g, node)?;
    let (best, coef) = sub.best(grid, g, node)?;
    out.score = diameter * best;
    if out.score > grad_tol {
        let n = grid.len();
        let combine = |vs: &[Vec<f64>]| -> Vec<f64> {
            (0..n).map(|i| vs.iter().zip(coef.iter()).map(|(v, c)| c * v[i]).sum()).collect()
        };
        let mut f = combine(&sub.f);
        let mut a = combine(&sub.a);
        let grad = node_gradient(grid, &f, node);
        if let Some(lead) = grad.iter().copied().find(|x| x.abs() > 1e-12) {
            if lead < 0.0 {
                f.iter_mut().chain(a.iter_mut()).for_each(|x| *x = -*x);
            }
        }
        out.certificate = Some(Certificate {
            system_residual: sys.max_unscaled_residual(&f, &a),
            f_fit: fit_quadratic(grid, &f),
            a_fit: fit_quadratic(grid, &a),
            gradient_norm: best,
            f,
            a,
        });
        out.verdict = Verdict::WarpedCandidate;
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    while nodes.len() < SECONDARY_PROBES.min(grid.len().saturating_sub(1)) {
        let k = rng.random_range(0..grid.len());
        if k != node && !nodes.contains(&k) {
            nodes.push(k);
        }
    }
    for k in nodes {
        let (b, _) = sub.best(grid, g, k)?;
        out.secondary.push((grid.point(k), diameter * b));
    }
    if out.secondary.iter().any(|(_, s)| *s > grad_tol) {
        out.verdict = Verdict::Inconclusive;
    }
    Ok(out)
}

/// Least-squares fit of node values by a quadratic polynomial.
pub fn fit_quadratic(grid: &Grid, values: &[f64]) -> PolynomialFit {
    let n = grid.dim();
    let names = grid.chart().coord_names();
    let mut labels = vec!["1".to_string()];
    labels.extend(names.iter().cloned());
    for i in 0..n {
        for j in i..n {
            labels.push(if i == j {
                format!("{}^2", names[i])
            } else {
                format!("{}*{}", names[i], names[j])
            });
        }
    }
    let row = |p: &[f64]| {
        let mut r = vec![1.0];
        r.extend_from_slice(p);
        for i in 0..n {
            for j in i..n {
                r.push(p[i] * p[j]);
            }
        }
        r
    };
    let pts: Vec<Vec<f64>> = grid.points().collect();
    let design = DMatrix::from_fn(pts.len(), labels.len(), |i, j| row(&pts[i])[j]);
    let rhs = DVector::from_column_slice(values);
    let qr = design.clone().qr();
    let qtb = qr.q().transpose() * &rhs;
    let coef = qr.r().solve_upper_triangular(&qtb).unwrap_or_else(|| DVector::zeros(labels.len()));
    let resid = design * &coef - rhs;
    let rms_residual = (resid.norm_squared() / values.len().max(1) as f64).sqrt();
    PolynomialFit {
        terms: labels.into_iter().zip(coef.iter().copied()).collect(),
        rms_residual,
    }
}

/// `max |Hess f(d_i, d_j) - a g_ij|` over the grid with exact derivatives.
pub fn verify_candidate(f: &ScalarExpr, a: &ScalarExpr, g: &MetricField, grid: &Grid, tol: f64) -> Result<ResidualReport> {
    let samples = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            let h = hessian_scalar(f, g, &p)?;
            let gv = g.values(&p)?;
            let av = a.eval(&p)?;
            Ok(Some((h - gv * av).amax()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples("candidate", grid, tol, &samples))
}

/// Writes `coordinates..., f, a` rows with 17 significant digits.
pub fn write_certificate_csv<W: std::io::Write>(grid: &Grid, cert: &Certificate, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = grid.chart().coord_names().to_vec();
    header.push("f".into());
    header.push("a".into());
    out.write_record(&header).map_err(csv_err)?;
    for i in 0..grid.len() {
        let mut rec: Vec<String> = grid.point(i).iter().map(|x| format!("{x:.16e}")).collect();
        rec.push(format!("{:.16e}", cert.f[i]));
        rec.push(format!("{:.16e}", cert.a[i]));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(e.to_string())
}
