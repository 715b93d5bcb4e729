//! RK4 geodesics of a warped metric: the fiber speed `e^(2t)|v_fiber|`
//! and the energy are conserved.

use codazzi_lab::gallery::named_example;
use codazzi_lab::geometry::integrate_geodesic;

fn main() -> codazzi_lab::Result<()> {
    let ex = named_example("warped_consistent")?;
    let tr = integrate_geodesic(&ex.g, &[0.2, 0.1, 0.1], &[0.6, 0.3, 0.2], 0.01, 100)?;
    let energy = |i: usize| -> codazzi_lab::Result<f64> {
        let m = ex.g.at(&tr.points[i])?;
        Ok(m.inner(&tr.velocities[i], &tr.velocities[i]))
    };
    for i in (0..tr.points.len()).step_by(25) {
        let p = &tr.points[i];
        let v = &tr.velocities[i];
        let fiber = (2.0 * p[0]).exp() * v[1];
        println!("s = {:.2}  p = {:.6?}  |v|^2 = {:.12}  e^2t x' = {:.12}", i as f64 * 0.01, p, energy(i)?, fiber);
    }
    println!("max covariant acceleration {:.2e}", tr.max_residual);
    Ok(())
}
