//! Parse a scalar field and read off exact first and second derivatives.

use codazzi_lab::ScalarExpr;

fn main() -> codazzi_lab::Result<()> {
    let vars = ["t", "x", "y"];
    let f = ScalarExpr::parse("exp(t) * sin(x*y) + sqrt(1 + x^2)", &vars)?;
    let p = [0.3, 0.7, -1.2];
    let jet = f.eval_jet2(&p)?;
    println!("f      = {f}");
    println!("f(p)   = {:.12}", jet.value);
    println!("grad f = {:?}", jet.grad);
    for i in 0..3 {
        let row: Vec<String> = (0..3).map(|j| format!("{:>14.8}", jet.hess(i, j))).collect();
        println!("hess   [{}]", row.join(" "));
    }

    // same field in a chart with the axes listed in another order
    let g = f.rebind(&["y", "x", "t"])?;
    println!("rebound value {:.12}", g.eval(&[p[2], p[1], p[0]])?);
    Ok(())
}
