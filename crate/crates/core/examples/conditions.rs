//! Eigen-structure and the four warped-product conditions across the
//! example battery.

use codazzi_lab::codazzi::{char_conditions, eigen_structure, CONDITION_NAMES};
use codazzi_lab::gallery::{named_example, BATTERY_IDS};
use codazzi_lab::tolerances::Tolerances;
use codazzi_lab::Grid;

fn main() -> codazzi_lab::Result<()> {
    let tol = Tolerances::default();
    println!("{:<20} {}", "example", CONDITION_NAMES.join("  "));
    for id in BATTERY_IDS {
        let ex = named_example(id)?;
        let grid = Grid::new(ex.chart(), &ex.grid)?;
        let eig = eigen_structure(&ex.a, &ex.g, &grid, tol.cluster)?;
        let c = char_conditions(&ex.a, &ex.g, &eig, &tol)?;
        let cells: Vec<String> = c
            .reports
            .iter()
            .map(|r| format!("{}({:.1e})", if r.pass { "T" } else { "F" }, r.max))
            .collect();
        println!("{id:<20} {}  agree={}", cells.join("  "), c.agree);
    }
    Ok(())
}
