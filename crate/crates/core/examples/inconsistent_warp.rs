//! A warped metric whose natural Codazzi tensor fails the conditions.
//! The detector still finds the radial potential `(x^2 + y^2)/2`.

use codazzi_lab::brinkmann::{detect_warped, verify_candidate};
use codazzi_lab::codazzi::{char_conditions, eigen_structure};
use codazzi_lab::gallery::{named_example, polar_pullback_residual};
use codazzi_lab::tolerances::Tolerances;
use codazzi_lab::{Grid, ScalarExpr};

fn main() -> codazzi_lab::Result<()> {
    let tol = Tolerances::default();
    let ex = named_example("inconsistent_warp")?;
    let names = ex.chart().coord_names();

    let grid = Grid::new(ex.chart(), &ex.grid)?;
    let eig = eigen_structure(&ex.a, &ex.g, &grid, tol.cluster)?;
    println!("conditions {:?}", char_conditions(&ex.a, &ex.g, &eig, &tol)?.booleans);

    let f = ScalarExpr::parse("(x^2 + y^2)/2", names)?;
    let a = ScalarExpr::parse("1", names)?;
    let r = verify_candidate(&f, &a, &ex.g, &grid, tol.candidate)?;
    println!("Hess f - g: max {:.2e}", r.max);

    let dgrid = Grid::new(ex.chart(), &ex.detect_grid)?;
    let (det, _) = detect_warped(&ex.g, &dgrid, &ex.probe, tol.sigma_rel, tol.grad, 0)?;
    println!("kernel dimension {}, verdict {:?}", det.kernel_dimension, det.verdict.verdict);
    if let Some(c) = &det.verdict.certificate {
        let terms: Vec<String> = c
            .f_fit
            .terms
            .iter()
            .filter(|(_, v)| v.abs() > 1e-6)
            .map(|(m, v)| format!("{v:+.4} {m}"))
            .collect();
        println!("certificate f ~ {}", terms.join(" "));
    }

    let polar = polar_pullback_residual(9, 1e-10)?;
    println!("polar form residual {:.2e}", polar.max);
    Ok(())
}
