//! The six closed forms for `mu` and the characteristics equation they solve.

use codazzi_lab::gallery::{characteristics_residual, mu_form, MuParams, G_VAR};
use codazzi_lab::{Chart, Grid, GridSpec, ScalarExpr};

fn main() -> codazzi_lab::Result<()> {
    let vars = ["t", "x", "y"];
    let chart = Chart::bounded(&vars, &[[0.0, 1.0], [0.5, 1.5], [0.5, 1.5]])?;
    let grid = Grid::new(&chart, &GridSpec::uniform(3, 6))?;
    let g = ScalarExpr::parse(&format!("2 + sin({G_VAR})"), &[G_VAR])?;
    let cases = [
        (1, MuParams { b: 1.0, c: 2.0, c1: 0.5, c3: 0.2, c4: 0.1, ..Default::default() }),
        (2, MuParams { a: 1.0, b: 2.0, c: 0.5, ..Default::default() }),
        (3, MuParams { a: 1.0, c: 2.0, ..Default::default() }),
        (4, MuParams { b: 2.0, c: 1.0, ..Default::default() }),
        (5, MuParams { c: 1.0, ..Default::default() }),
        (6, MuParams { b: 1.0, ..Default::default() }),
    ];
    for (k, params) in cases {
        let mu = mu_form(k, &params, &g, &vars)?;
        let (a, b, c) = params.pde_coefficients(k).expect("valid case");
        let r = characteristics_residual(&mu, a, b, c, &grid, 1e-10)?;
        println!("form {k}: ({a:+.2}, {b:+.2}, {c:+.2})  residual {:.2e}  mu = {mu}", r.max);
    }
    Ok(())
}
