use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codazzi::ResidualReport;
use crate::error::{Error, Result};
use crate::expr::{Func, ScalarExpr};
use crate::geometry::Grid;

/// Variable name of the free one-variable function `G`.
pub const G_VAR: &str = "s";

/// Constants of the six forms. Unused fields are ignored by a form but
/// still take part in its case conditions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl MuParams {
    /// `(a, b, c)` for which form `k` solves
    /// `(ax+b) mu_x + (ay+c) mu_y = a(1-mu)`.
    ///
    /// Form 1 comes from a different branch of the analysis; it solves the
    /// equation only when `c2 = 0`, with `a = -(b c3 + c c4)`.
    pub fn pde_coefficients(&self, k: u8) -> Option<(f64, f64, f64)> {
        match k {
            1 if self.c2 == 0.0 => Some((-(self.b * self.c3 + self.c * self.c4), self.b, self.c)),
            1 => None,
            2..=6 => Some((self.a, self.b, self.c)),
            _ => None,
        }
    }
}

fn check_case(k: u8, p: &MuParams) -> Result<()> {
    let (a, b, c) = (p.a != 0.0, p.b != 0.0, p.c != 0.0);
    let ok = match k {
        1 => true,
        2 => a && b,
        3 => a && !b,
        4 => !a && b,
        5 => !a && !b && c,
        6 => !a && b && !c,
        _ => return Err(Error::BadParams(format!("form index must be 1..=6, got {k}"))),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::BadParams(format!(
            "form {k} does not apply to a = {}, b = {}, c = {}",
            p.a, p.b, p.c
        )))
    }
}

/// Composes form `k` over the chart variables `names`, which must include
/// `x` and `y`. `g` is an expression in the single variable [`G_VAR`];
/// it is ignored by form 1.
pub fn mu_form<S: AsRef<str>>(k: u8, p: &MuParams, g: &ScalarExpr, names: &[S]) -> Result<ScalarExpr> {
    check_case(k, p)?;
    let find = |v: &str| {
        names
            .iter()
            .position(|n| n.as_ref() == v)
            .map(|i| ScalarExpr::var(i, names))
            .ok_or_else(|| Error::UnknownVariable(v.to_string()))
    };
    let (x, y) = (find("x")?, find("y")?);
    let num = |v: f64| ScalarExpr::constant(v, names);
    let gg = g.rebind(&[G_VAR])?;
    let big_g = |arg: ScalarExpr| gg.compose(&[arg]);
    Ok(match k {
        1 => {
            let den = num(1.0) - num(p.c3) * x.clone() - num(p.c4) * y.clone()
                - num(p.c2) * (x.clone().powf(2.0) + y.clone().powf(2.0));
            num(1.0) + num(p.c1) / den
        }
        2 => {
            let ax = num(p.a) * x.clone();
            let arg = (num(p.c) + num(p.a) * y) / (num(p.a) * (num(p.b) + ax.clone()));
            (ax.clone() + big_g(arg)?) / (ax + num(p.b))
        }
        3 => {
            let den = num(p.c) + num(p.a) * y.clone();
            (num(p.a) * y + big_g(x / den.clone())?) / den
        }
        4 => big_g((num(p.b) * y - num(p.c) * x) / num(p.b))?,
        5 => big_g(x)?,
        _ => big_g(y)?,
    })
}

/// A random admissible parameter set for form `k` and a smooth
/// `G(s) = k0 + k1 s + k2 sin(k3 s)`. Denominators stay away from zero on
/// `x, y` in `[0.5, 1.5]`.
pub fn random_mu_form<R: Rng>(k: u8, rng: &mut R) -> Result<(MuParams, ScalarExpr)> {
    let signed = |lo: f64, hi: f64, rng: &mut R| {
        let m = rng.random_range(lo..hi);
        if rng.random_bool(0.5) { m } else { -m }
    };
    let mut p = MuParams::default();
    match k {
        1 => {
            p.c1 = rng.random_range(-1.0..1.0);
            p.c3 = rng.random_range(-0.2..0.2);
            p.c4 = rng.random_range(-0.2..0.2);
            p.b = rng.random_range(-1.0..1.0);
            p.c = rng.random_range(-1.0..1.0);
        }
        2 => {
            p.a = signed(0.5, 1.5, rng);
            p.b = p.a.signum() * rng.random_range(0.5..1.5);
            p.c = rng.random_range(-1.0..1.0);
        }
        3 => {
            p.a = signed(0.5, 1.5, rng);
            p.c = p.a.signum() * rng.random_range(0.5..1.5);
        }
        4 => {
            p.b = signed(0.5, 1.5, rng);
            p.c = rng.random_range(-1.0..1.0);
        }
        5 => p.c = signed(0.5, 1.5, rng),
        6 => p.b = signed(0.5, 1.5, rng),
        _ => return Err(Error::BadParams(format!("form index must be 1..=6, got {k}"))),
    }
    let vars = [G_VAR];
    let s = ScalarExpr::var(0, &vars);
    let c = |v: f64| ScalarExpr::constant(v, &vars);
    let k3 = rng.random_range(0.5..2.0);
    let g = c(rng.random_range(-1.0..1.0))
        + c(rng.random_range(-1.0..1.0)) * s.clone()
        + c(rng.random_range(-1.0..1.0)) * (c(k3) * s).apply(Func::Sin);
    Ok((p, g))
}

/// `max |(ax+b) mu_x + (ay+c) mu_y - a(1-mu)|` over the grid, with exact
/// derivatives. The grid's chart must have axes named `x` and `y`.
pub fn characteristics_residual(mu: &ScalarExpr, a: f64, b: f64, c: f64, grid: &Grid, tol: f64) -> Result<ResidualReport> {
    let chart = grid.chart();
    let axis = |v: &str| chart.axis(v).ok_or_else(|| Error::UnknownVariable(v.to_string()));
    let (ix, iy) = (axis("x")?, axis("y")?);
    let mu = mu.rebind(chart.coord_names())?;
    let samples = grid
        .points()
        .map(|p| {
            let j = mu.eval_jet2(&p)?;
            let (x, y) = (p[ix], p[iy]);
            let r = (a * x + b) * j.grad[ix] + (a * y + c) * j.grad[iy] - a * (1.0 - j.value);
            Ok(Some(r.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples("characteristics", grid, tol, &samples))
}
