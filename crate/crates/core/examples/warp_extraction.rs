//! Recover the warping function of `dt^2 + e^(2t)(dx^2 + dy^2)` from a
//! Codazzi tensor with eigenvalues `2e^t` and `e^t`.

use codazzi_lab::codazzi::{eigen_structure, eta_and_warp_extract};
use codazzi_lab::gallery::named_example;
use codazzi_lab::tolerances::Tolerances;
use codazzi_lab::Grid;

fn main() -> codazzi_lab::Result<()> {
    let tol = Tolerances::default();
    let ex = named_example("warped_consistent")?;
    let grid = Grid::new(ex.chart(), &ex.grid)?;
    let eig = eigen_structure(&ex.a, &ex.g, &grid, tol.cluster)?;
    let w = eta_and_warp_extract(&ex.a, &ex.g, &eig, &tol)?;
    println!("eta in [{:.9}, {:.9}]", w.eta_range[0], w.eta_range[1]);
    println!("eta leaf variation {:.2e}", w.eta_leaf.max);
    println!("warp residual {:.2e}, alignment {:.2e}", w.warp.max, w.alignment.max);

    // along one base line q = 2t, so e^-q g_xx stays at 1
    let n = grid.counts()[0];
    for k in 0..n {
        let i = grid.linear_index(&[k, 0, 0]);
        let (q, h) = (w.q[i].unwrap(), w.h[i].as_ref().unwrap());
        println!("t = {:.3}  q = {:.6}  h_xx = {:.9}", grid.point(i)[0], q, h[0]);
    }
    Ok(())
}
