use nalgebra::DMatrix;

use super::fields::{CoordinateMap, MetricField};
use crate::error::{Error, Result};

/// `(phi^* g)_ab = d_a phi^i d_b phi^j g_ij(phi(p))`.
pub fn pullback_metric(phi: &CoordinateMap, g: &MetricField, p: &[f64]) -> Result<DMatrix<f64>> {
    if phi.components().len() != g.dim() {
        return Err(Error::Dimension(format!(
            "map has {} components, target chart has dimension {}",
            phi.components().len(),
            g.dim()
        )));
    }
    let (image, jac) = phi.apply(p)?;
    if jac.nrows() == jac.ncols() {
        let scale = jac.amax().max(1.0).powi(jac.nrows() as i32);
        if jac.determinant().abs() <= 1e-12 * scale {
            return Err(Error::SingularJacobian(p.to_vec()));
        }
    }
    let gm = g.values(&image)?;
    Ok(jac.transpose() * gm * jac)
}
