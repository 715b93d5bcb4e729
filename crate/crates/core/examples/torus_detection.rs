//! The torus metric admits no non-constant solution of `Hess f = a g`.

use codazzi_lab::brinkmann::detect_warped;
use codazzi_lab::gallery::named_example;
use codazzi_lab::Grid;

fn main() -> codazzi_lab::Result<()> {
    let ex = named_example("torus")?;
    for n in [7, 9] {
        let spec = codazzi_lab::GridSpec::uniform(3, n);
        let grid = Grid::new(ex.chart(), &spec)?;
        let (det, _) = detect_warped(&ex.g, &grid, &ex.probe, 1e-6, 1e-3, 0)?;
        println!(
            "{n}^3: {} unknowns, kernel dimension {}, smallest singular values {:.2e} {:.2e}, verdict {:?}",
            det.unknowns, det.kernel_dimension, det.singular_tail[0], det.singular_tail[1], det.verdict.verdict
        );
    }
    Ok(())
}
