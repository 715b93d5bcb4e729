//! Christoffel symbols and Hessians for a metric of the two-eigenvalue family.

use codazzi_lab::gallery::build_family;
use codazzi_lab::geometry::{christoffel_at, christoffel_family_closed_form, hessian_family_closed_form, hessian_scalar};
use codazzi_lab::{Chart, ScalarExpr};

fn main() -> codazzi_lab::Result<()> {
    let vars = ["t", "x", "y"];
    let chart = Chart::bounded(&vars, &[[0.0, 1.0], [0.5, 1.5], [0.5, 1.5]])?;
    let mu = ScalarExpr::parse("1 + y/x^2", &vars)?;
    let fam = build_family(0.5, &mu, &chart)?;
    let p = [0.4, 0.9, 1.1];

    let gamma = christoffel_at(&fam.g, &p)?;
    let closed = christoffel_family_closed_form(fam.lambda, &fam.mu, &p)?;
    for k in 0..3 {
        for i in 0..3 {
            for j in i..3 {
                let v = gamma.get(k, i, j);
                if v.abs() > 1e-14 {
                    println!("Gamma^{}_{}{} = {v:+.10}", vars[k], vars[i], vars[j]);
                }
            }
        }
    }
    println!("closed form differs by {:.2e}", gamma.max_abs_diff(&closed));

    let f = ScalarExpr::parse("t*x + y^2", &vars)?;
    let h = hessian_scalar(&f, &fam.g, &p)?;
    let hc = hessian_family_closed_form(fam.lambda, &fam.mu, &f, &p)?;
    println!("Hess f ={h}");
    println!("closed form differs by {:.2e}", (h - hc).amax());
    Ok(())
}
