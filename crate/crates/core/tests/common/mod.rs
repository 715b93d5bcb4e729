#![allow(dead_code)]

use codazzi_lab::expr::Func;
use codazzi_lab::ScalarExpr;
use rand::Rng;

pub const TXY: [&str; 3] = ["t", "x", "y"];

/// Random smooth expression over `t, x, y` that is defined everywhere:
/// divisions, logarithms and roots only see arguments bounded away from 0.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> ScalarExpr {
    let c = |v: f64| ScalarExpr::constant(v, &TXY);
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.7) {
            ScalarExpr::var(rng.random_range(0..3), &TXY)
        } else {
            c((rng.random_range(-2.0f64..2.0) * 100.0).round() / 100.0)
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.random_range(0..10) {
        0 => a + random_expr(rng, depth - 1),
        1 => a - random_expr(rng, depth - 1),
        2 | 3 => a * random_expr(rng, depth - 1),
        4 => a / (c(1.5) + random_expr(rng, depth - 1).apply(Func::Sin)),
        5 => a.apply(Func::Sin),
        6 => a.apply(Func::Cos),
        7 => a.apply(Func::Sin).apply(Func::Exp),
        8 => (c(1.0) + a.powf(2.0)).apply(if rng.random_bool(0.5) { Func::Ln } else { Func::Sqrt }),
        _ => a.powf(rng.random_range(2..4) as f64),
    }
}

/// Gradient and Hessian of `f` at `p` from central differences of values
/// with one Richardson step, independent of the forward-mode code.
pub fn fd_derivatives(f: &ScalarExpr, p: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = p.len();
    let ev = |q: &[f64]| f.eval(q).expect("expression is defined");
    let shifted = |di: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for (i, d) in di {
            q[*i] += d;
        }
        ev(&q)
    };
    let grad_h = |i: usize, h: f64| (shifted(&[(i, h)]) - shifted(&[(i, -h)])) / (2.0 * h);
    let hess_h = |i: usize, j: usize, h: f64| {
        if i == j {
            (shifted(&[(i, h)]) - 2.0 * ev(p) + shifted(&[(i, -h)])) / (h * h)
        } else {
            (shifted(&[(i, h), (j, h)]) - shifted(&[(i, h), (j, -h)]) - shifted(&[(i, -h), (j, h)])
                + shifted(&[(i, -h), (j, -h)]))
                / (4.0 * h * h)
        }
    };
    let rich = |d: &dyn Fn(f64) -> f64, h: f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
    let grad = (0..n).map(|i| rich(&|h| grad_h(i, h), 1e-3)).collect();
    let hess = (0..n)
        .map(|i| (0..n).map(|j| rich(&|h| hess_h(i, j, h), 2e-3)).collect())
        .collect();
    (grad, hess)
}

/// Largest `|ad - fd| / max(1, |ad|)` over gradient and Hessian entries.
pub fn ad_fd_defect(f: &ScalarExpr, p: &[f64]) -> f64 {
    let jet = f.eval_jet2(p).expect("expression is defined");
    let (g, h) = fd_derivatives(f, p);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        worst = worst.max(rel(jet.grad[i], g[i]));
        for j in 0..p.len() {
            worst = worst.max(rel(jet.hess(i, j), h[i][j]));
        }
    }
    worst
}
