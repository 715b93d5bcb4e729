//! Codazzi residual of the torus example, then of a perturbed copy.

use codazzi_lab::codazzi::codazzi_residual;
use codazzi_lab::gallery::named_example;
use codazzi_lab::geometry::SymField;
use codazzi_lab::{Grid, ScalarExpr, SymTensorField};

fn main() -> codazzi_lab::Result<()> {
    let ex = named_example("torus")?;
    let grid = Grid::new(ex.chart(), &ex.grid)?;
    let r = codazzi_residual(&ex.a, &ex.g, &grid, 1e-8)?;
    println!("{}: max {:.3e} over {} nodes, pass {}", ex.id, r.max, r.included, r.pass);

    let mut broken: SymField = ex.a.field().clone();
    let bump = ScalarExpr::parse("0.1*cos(t)", ex.chart().coord_names())?;
    broken.set_entry(1, 1, broken.entry(1, 1).clone() + bump)?;
    let r = codazzi_residual(&SymTensorField::new(broken), &ex.g, &grid, 1e-8)?;
    println!("perturbed: max {:.3e} at {:?}, pass {}", r.max, r.argmax, r.pass);
    Ok(())
}
