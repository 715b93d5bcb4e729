use super::connection::christoffel_at;
use super::fields::MetricField;
use crate::error::{Error, Result};

/// Output of a fixed-step geodesic integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// Largest `|nabla_x' x'|_g` over interior samples, with the acceleration
    /// taken as a central difference of the stored velocities.
    pub max_residual: f64,
}

fn rhs(g: &MetricField, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let gamma = christoffel_at(g, x)?;
    Ok(gamma.contract(v, v).into_iter().map(|a| -a).collect())
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

/// Classical RK4 on `x'' + Gamma(x', x') = 0` with a fixed step.
pub fn integrate_geodesic(g: &MetricField, p0: &[f64], v0: &[f64], step: f64, n_steps: usize) -> Result<Trajectory> {
    let chart = g.chart();
    let check = |x: &mut Vec<f64>, i: usize| -> Result<()> {
        if !chart.contains(x) {
            return Err(Error::LeftDomain(i));
        }
        chart.wrap(x);
        Ok(())
    };
    let mut x = p0.to_vec();
    check(&mut x, 0)?;
    let mut v = v0.to_vec();
    let mut points = vec![x.clone()];
    let mut velocities = vec![v.clone()];
    let h = step;
    for i in 1..=n_steps {
        let k1x = v.clone();
        let k1v = rhs(g, &x, &v)?;
        let x2 = axpy(h / 2.0, &k1x, &x);
        let v2 = axpy(h / 2.0, &k1v, &v);
        let k2v = rhs(g, &x2, &v2)?;
        let x3 = axpy(h / 2.0, &v2, &x);
        let v3 = axpy(h / 2.0, &k2v, &v);
        let k3v = rhs(g, &x3, &v3)?;
        let x4 = axpy(h, &v3, &x);
        let v4 = axpy(h, &k3v, &v);
        let k4v = rhs(g, &x4, &v4)?;
        let n = x.len();
        let mut xn = vec![0.0; n];
        let mut vn = vec![0.0; n];
        for k in 0..n {
            xn[k] = x[k] + h / 6.0 * (k1x[k] + 2.0 * v2[k] + 2.0 * v3[k] + v4[k]);
            vn[k] = v[k] + h / 6.0 * (k1v[k] + 2.0 * k2v[k] + 2.0 * k3v[k] + k4v[k]);
        }
        check(&mut xn, i)?;
        x = xn;
        v = vn;
        points.push(x.clone());
        velocities.push(v.clone());
    }
    let mut max_residual: f64 = 0.0;
    for i in 1..points.len().saturating_sub(1) {
        let accel: Vec<f64> = velocities[i + 1]
            .iter()
            .zip(&velocities[i - 1])
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        max_residual = max_residual.max(acceleration_residual(g, &points[i], &velocities[i], &accel)?);
    }
    Ok(Trajectory {
        points,
        velocities,
        max_residual,
    })
}

/// `|a + Gamma(v, v)|_g`, the covariant acceleration of a curve through `p`
/// with velocity `v` and coordinate acceleration `a`.
pub fn acceleration_residual(g: &MetricField, p: &[f64], v: &[f64], a: &[f64]) -> Result<f64> {
    let m = g.at(p)?;
    let gamma = super::connection::Christoffel::from_metric(&m);
    let cov: Vec<f64> = gamma
        .contract(v, v)
        .iter()
        .zip(a)
        .map(|(gv, ai)| gv + ai)
        .collect();
    Ok(m.norm(&cov))
}
