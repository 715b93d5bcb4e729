//! Levi-Civita connection in coordinates.

use nalgebra::DMatrix;

use super::fields::{MetricAt, MetricField, SymJet, SymTensorField, VectorField};
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::tolerances::TOL_COLLISION;

/// Christoffel symbols `Gamma^k_{ij}` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    fn set_sym(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.data[(k * n + i) * n + j] = v;
        self.data[(k * n + j) * n + i] = v;
    }

    /// `Gamma^k_{ij} = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)`.
    pub fn from_metric(m: &MetricAt) -> Self {
        let n = m.dim();
        let mut lowered = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (m.dg[i][(j, l)] + m.dg[j][(i, l)] - m.dg[l][(i, j)]);
                    lowered[(l * n + i) * n + j] = v;
                    lowered[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut out = Self::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = (0..n)
                        .map(|l| m.g_inv[(k, l)] * lowered[(l * n + i) * n + j])
                        .sum();
                    out.set_sym(k, i, j, v);
                }
            }
        }
        out
    }

    /// `Gamma(u, v)^k = Gamma^k_{ij} u^i v^j`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += self.get(k, i, j) * u[i] * v[j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn christoffel_at(g: &MetricField, p: &[f64]) -> Result<Christoffel> {
    Ok(Christoffel::from_metric(&g.at(p)?))
}

fn collision_gap(lambda: f64, mu: f64, p: &[f64]) -> Result<f64> {
    let gap = lambda - mu;
    if gap.abs() < TOL_COLLISION {
        return Err(Error::EigenvalueCollision {
            point: p.to_vec(),
            gap: gap.abs(),
        });
    }
    Ok(gap)
}

/// Closed-form Christoffel symbols of
/// `g = (lambda - mu)^-2 dt^2 + lambda sum dx_i^2`, with `t` the first axis.
pub fn christoffel_family_closed_form(lambda: f64, mu: &ScalarExpr, p: &[f64]) -> Result<Christoffel> {
    let n = mu.dim();
    let m = mu.eval_jet2(p)?;
    let gap = collision_gap(lambda, m.value, p)?;
    let mut out = Christoffel::zeros(n);
    out.set_sym(0, 0, 0, m.grad[0] / gap);
    for i in 1..n {
        out.set_sym(i, 0, 0, -m.grad[i] / (lambda * gap.powi(3)));
        out.set_sym(0, i, 0, m.grad[i] / gap);
    }
    Ok(out)
}

/// `(nabla_X T)_jk = d_X T_jk - Gamma^m_{Xj} T_mk - Gamma^m_{Xk} T_jm` from
/// precomputed values and partials.
pub fn covariant_derivative_sym(t: &SymJet, gamma: &Christoffel, x: usize) -> DMatrix<f64> {
    let n = gamma.dim();
    let mut out = t.partials[x].clone();
    for j in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for m in 0..n {
                s += gamma.get(m, x, j) * t.value[(m, k)] + gamma.get(m, x, k) * t.value[(j, m)];
            }
            out[(j, k)] -= s;
        }
    }
    out
}

/// `nabla_{d_x} T` for a symmetric `(0,2)` tensor field.
pub fn covariant_derivative(t: &SymTensorField, g: &MetricField, x: usize, p: &[f64]) -> Result<DMatrix<f64>> {
    let gamma = christoffel_at(g, p)?;
    Ok(covariant_derivative_sym(&t.jet(p)?, &gamma, x))
}

/// All directional derivatives `nabla_{d_x} T`, indexed by `x`.
pub fn covariant_derivative_all(t: &SymTensorField, g: &MetricField, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let gamma = christoffel_at(g, p)?;
    let jet = t.jet(p)?;
    Ok((0..t.dim()).map(|x| covariant_derivative_sym(&jet, &gamma, x)).collect())
}

/// `(nabla_U V)^k = U^m (d_m V^k + Gamma^k_{mj} V^j)` with `dv[m][k] = d_m V^k`.
pub fn covariant_derivative_raw(gamma: &Christoffel, u: &[f64], v: &[f64], dv: &[Vec<f64>]) -> Vec<f64> {
    let n = gamma.dim();
    let gv = gamma.contract(u, v);
    (0..n)
        .map(|k| (0..n).map(|m| u[m] * dv[m][k]).sum::<f64>() + gv[k])
        .collect()
}

/// `nabla_{d_x} V` for an expression vector field.
pub fn covariant_derivative_vector(v: &VectorField, g: &MetricField, x: usize, p: &[f64]) -> Result<Vec<f64>> {
    let gamma = christoffel_at(g, p)?;
    let (vals, jac) = v.jacobian(p)?;
    let n = vals.len();
    Ok((0..n)
        .map(|k| jac[k][x] + (0..n).map(|m| gamma.get(k, x, m) * vals[m]).sum::<f64>())
        .collect())
}

/// `Hess f (d_i, d_j) = d_i d_j f - Gamma^k_{ij} d_k f`.
pub fn hessian_scalar(f: &ScalarExpr, g: &MetricField, p: &[f64]) -> Result<DMatrix<f64>> {
    let gamma = christoffel_at(g, p)?;
    let jet = f.eval_jet2(p)?;
    Ok(hessian_from_jet(&jet.hess_matrix(), &jet.grad, &gamma))
}

pub fn hessian_from_jet(hess: &[Vec<f64>], grad: &[f64], gamma: &Christoffel) -> DMatrix<f64> {
    let n = gamma.dim();
    DMatrix::from_fn(n, n, |i, j| {
        hess[i][j] - (0..n).map(|k| gamma.get(k, i, j) * grad[k]).sum::<f64>()
    })
}

/// Closed-form Hessian components for the two-eigenvalue family metric
/// (first axis `t`, the rest spatial).
pub fn hessian_family_closed_form(lambda: f64, mu: &ScalarExpr, f: &ScalarExpr, p: &[f64]) -> Result<DMatrix<f64>> {
    let n = mu.dim();
    let m = mu.eval_jet2(p)?;
    let fj = f.eval_jet2(p)?;
    let gap = collision_gap(lambda, m.value, p)?;
    let mut h = DMatrix::zeros(n, n);
    let spatial: f64 = (1..n).map(|i| fj.grad[i] * m.grad[i]).sum();
    h[(0, 0)] = fj.hess(0, 0) - m.grad[0] * fj.grad[0] / gap + spatial / (lambda * gap.powi(3));
    for i in 1..n {
        let v = fj.hess(0, i) - m.grad[i] * fj.grad[0] / gap;
        h[(0, i)] = v;
        h[(i, 0)] = v;
        for j in i..n {
            h[(i, j)] = fj.hess(i, j);
            h[(j, i)] = fj.hess(i, j);
        }
    }
    Ok(h)
}

/// `[V, W]^k = V^m d_m W^k - W^m d_m V^k`.
pub fn lie_bracket(v: &VectorField, w: &VectorField, p: &[f64]) -> Result<Vec<f64>> {
    let (vv, jv) = v.jacobian(p)?;
    let (wv, jw) = w.jacobian(p)?;
    let n = vv.len();
    Ok((0..n)
        .map(|k| (0..n).map(|m| vv[m] * jw[k][m] - wv[m] * jv[k][m]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chart::Chart;

    fn txy() -> Chart {
        Chart::bounded(&["t", "x", "y"], &[[-1.0, 1.0], [-3.0, 3.0], [-3.0, 3.0]]).unwrap()
    }

    fn family_metric(chart: &Chart, lambda: f64, mu: &str) -> MetricField {
        let l = lambda.to_string();
        MetricField::parse(
            chart,
            &[
                (0, 0, &format!("({l} - ({mu}))^(-2)")),
                (1, 1, &l),
                (2, 2, &l),
            ],
        )
        .unwrap()
    }

    #[test]
    fn flat_metric_has_no_christoffels() {
        let g = MetricField::euclidean(&txy());
        let gamma = christoffel_at(&g, &[0.3, -0.2, 1.0]).unwrap();
        assert_eq!(gamma, Christoffel::zeros(3));
    }

    #[test]
    fn xy_family_christoffels_at_012() {
        let chart = txy();
        let g = family_metric(&chart, 1.0, "x*y");
        let gamma = christoffel_at(&g, &[0.0, 1.0, 2.0]).unwrap();
        let mut expected = Christoffel::zeros(3);
        expected.set_sym(1, 0, 0, 2.0);
        expected.set_sym(2, 0, 0, 1.0);
        expected.set_sym(0, 1, 0, -2.0);
        expected.set_sym(0, 2, 0, -1.0);
        assert!(gamma.max_abs_diff(&expected) < 1e-14, "{gamma:?}");
        let mu = ScalarExpr::parse("x*y", chart.coord_names()).unwrap();
        let closed = christoffel_family_closed_form(1.0, &mu, &[0.0, 1.0, 2.0]).unwrap();
        assert!(closed.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn closed_form_constant_mu_and_torus_critical_point() {
        let chart = txy();
        let zero = ScalarExpr::parse("0", chart.coord_names()).unwrap();
        let c = christoffel_family_closed_form(1.0, &zero, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(c, Christoffel::zeros(3));
        let mu = ScalarExpr::parse("0.5*sin(x)*cos(y)", chart.coord_names()).unwrap();
        let p = [0.0, std::f64::consts::FRAC_PI_2, 0.0];
        let c = christoffel_family_closed_form(1.0, &mu, &p).unwrap();
        assert!(c.max_abs_diff(&Christoffel::zeros(3)) < 1e-15);
    }

    #[test]
    fn closed_form_reports_collision() {
        let chart = txy();
        let mu = ScalarExpr::parse("x", chart.coord_names()).unwrap();
        assert!(matches!(
            christoffel_family_closed_form(1.0, &mu, &[0.0, 1.0, 0.0]),
            Err(Error::EigenvalueCollision { .. })
        ));
    }

    #[test]
    fn polar_christoffels() {
        let chart = Chart::bounded(&["r", "th"], &[[0.5, 3.0], [0.0, 6.0]]).unwrap();
        let g = MetricField::parse(&chart, &[(0, 0, "1"), (1, 1, "r^2")]).unwrap();
        let gamma = christoffel_at(&g, &[2.0, 0.7]).unwrap();
        assert!((gamma.get(0, 1, 1) + 2.0).abs() < 1e-14);
        assert!((gamma.get(1, 0, 1) - 0.5).abs() < 1e-14);
        assert!((gamma.get(1, 1, 0) - 0.5).abs() < 1e-14);
        assert_eq!(gamma.get(0, 0, 0), 0.0);
    }

    #[test]
    fn metric_is_parallel() {
        let chart = txy();
        let g = family_metric(&chart, 1.0, "0.5*sin(x)*cos(y) + 0.1*t*x");
        let a = SymTensorField::from_metric(&g);
        for p in [[0.1, 0.2, 0.3], [-0.5, 1.0, 2.0]] {
            for d in covariant_derivative_all(&a, &g, &p).unwrap() {
                assert!(d.amax() < 1e-12, "{d}");
            }
        }
    }

    #[test]
    fn prop42_item_ii_at_012() {
        let chart = txy();
        let g = family_metric(&chart, 1.0, "x*y");
        let a = SymTensorField::parse(&chart, &[(0, 0, "x*y*(1 - x*y)^(-2)"), (1, 1, "1"), (2, 2, "1")])
            .unwrap();
        let d = covariant_derivative(&a, &g, 1, &[0.0, 1.0, 2.0]).unwrap();
        // (d_x mu) g_tt = 2 * 1
        assert!((d[(0, 0)] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn constant_vector_field_is_parallel_in_flat_space() {
        let chart = txy();
        let g = MetricField::euclidean(&chart);
        let v = VectorField::parse(&chart, &["1", "-2", "0.5"]).unwrap();
        for x in 0..3 {
            let d = covariant_derivative_vector(&v, &g, x, &[0.2, 0.1, -0.3]).unwrap();
            assert!(d.iter().all(|c| *c == 0.0));
        }
    }

    #[test]
    fn hessians() {
        let chart = txy();
        let g = MetricField::euclidean(&chart);
        let f = ScalarExpr::parse("x^2/2 + y^2/2", chart.coord_names()).unwrap();
        let h = hessian_scalar(&f, &g, &[0.3, 0.4, 0.5]).unwrap();
        assert_eq!(h, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0, 1.0])));

        let g = family_metric(&chart, 1.0, "x*y");
        let t = ScalarExpr::parse("t", chart.coord_names()).unwrap();
        let h = hessian_scalar(&t, &g, &[0.0, 1.0, 2.0]).unwrap();
        assert!(h[(0, 0)].abs() < 1e-14);
        assert!((h[(0, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn inconsistent_warp_potential_is_concircular() {
        let chart = Chart::bounded(&["t", "x", "y"], &[[0.0, 1.0], [0.5, 1.5], [0.5, 1.5]]).unwrap();
        let g = family_metric(&chart, 1.0, "1 + y/x^2");
        let f = ScalarExpr::parse("(x^2+y^2)/2", chart.coord_names()).unwrap();
        let p = [0.0, 1.0, 1.0];
        let h = hessian_scalar(&f, &g, &p).unwrap();
        assert!((h - g.values(&p).unwrap()).amax() < 1e-13);
    }

    #[test]
    fn bracket_examples() {
        let chart = txy();
        let dx = VectorField::coordinate(&chart, 1);
        let dy = VectorField::coordinate(&chart, 2);
        assert_eq!(lie_bracket(&dx, &dy, &[0.0, 1.0, 2.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        let v = VectorField::parse(&chart, &["0", "0", "x"]).unwrap();
        let w = VectorField::parse(&chart, &["0", "y", "0"]).unwrap();
        let b = lie_bracket(&v, &w, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(b, vec![0.0, 1.0, -2.0]);
        assert_eq!(lie_bracket(&v, &v, &[0.0, 1.0, 2.0]).unwrap(), vec![0.0; 3]);
    }
}
