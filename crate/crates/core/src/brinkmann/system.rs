use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::geometry::{Christoffel, Grid, MetricField};

/// Minimum samples per axis for the second-order stencils.
pub const MIN_NODES_PER_AXIS: usize = 5;

/// Weights `(index along axis, weight)` of a first (`order = 1`) or second
/// derivative stencil at index `i`. Periodic axes wrap; bounded axes switch
/// to one-sided second-order stencils at the two end nodes.
pub fn axis_stencil(count: usize, periodic: bool, h: f64, i: usize, order: u8) -> Vec<(usize, f64)> {
    let wrap = |k: isize| k.rem_euclid(count as isize) as usize;
    let ii = i as isize;
    let interior = periodic || (i > 0 && i + 1 < count);
    match (order, interior) {
        (1, true) => vec![(wrap(ii - 1), -0.5 / h), (wrap(ii + 1), 0.5 / h)],
        (2, true) => {
            let w = 1.0 / (h * h);
            vec![(wrap(ii - 1), w), (i, -2.0 * w), (wrap(ii + 1), w)]
        }
        (1, false) => {
            let s = if i == 0 { 1.0 } else { -1.0 };
            let at = |k: usize| if i == 0 { k } else { count - 1 - k };
            vec![(at(0), -1.5 * s / h), (at(1), 2.0 * s / h), (at(2), -0.5 * s / h)]
        }
        (2, false) => {
            let w = 1.0 / (h * h);
            let at = |k: usize| if i == 0 { k } else { count - 1 - k };
            vec![(at(0), 2.0 * w), (at(1), -5.0 * w), (at(2), 4.0 * w), (at(3), -w)]
        }
        _ => panic!("stencil order must be 1 or 2"),
    }
}

/// Discretization of `Hess f - a g = 0` with one equation per node and
/// index pair `i <= j`.
///
/// Unknowns are laid out as `f` at columns `[0, N)` and `a` at `[N, 2N)`.
/// Row `r` belongs to node `r / m` and pair `pairs[r % m]`, where
/// `m = n(n+1)/2`. Each node's rows are scaled by `1/|g(p)|_F`.
#[derive(Debug, Clone)]
pub struct HessSystem {
    pub grid: Grid,
    pub pairs: Vec<(usize, usize)>,
    /// Sparse `f` coefficients per row, columns sorted.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Coefficient of the row's own node value of `a`: `-g_ij / |g|_F`.
    pub a_coef: Vec<f64>,
    /// `1/|g(p)|_F` per node.
    pub row_scale: Vec<f64>,
}

/// Stencil weights of `d_axis` at `node`, as `(node index, weight)`.
pub fn node_stencil(grid: &Grid, node: usize, axis: usize, order: u8) -> Vec<(usize, f64)> {
    let multi = grid.multi_index(node);
    let count = grid.counts()[axis];
    let periodic = grid.chart().periodic()[axis];
    axis_stencil(count, periodic, grid.spacing()[axis], multi[axis], order)
        .into_iter()
        .map(|(k, w)| {
            let mut m = multi.clone();
            m[axis] = k;
            (grid.linear_index(&m), w)
        })
        .collect()
}

fn mixed_stencil(grid: &Grid, node: usize, i: usize, j: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for (ni, wi) in node_stencil(grid, node, i, 1) {
        for (nj, wj) in node_stencil(grid, ni, j, 1) {
            out.push((nj, wi * wj));
        }
    }
    out
}

fn compress(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (c, w) in entries {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += w,
            _ => out.push((c, w)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

impl HessSystem {
    pub fn node_count(&self) -> usize {
        self.grid.len()
    }

    pub fn rows_per_node(&self) -> usize {
        self.pairs.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn unknown_count(&self) -> usize {
        2 * self.node_count()
    }

    /// `L(f, a)` row by row.
    pub fn apply(&self, f: &[f64], a: &[f64]) -> Vec<f64> {
        let m = self.rows_per_node();
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| row.iter().map(|(c, w)| w * f[*c]).sum::<f64>() + self.a_coef[r] * a[r / m])
            .collect()
    }

    /// Euclidean norm of `L(f, a)`.
    pub fn residual_norm(&self, f: &[f64], a: &[f64]) -> f64 {
        self.apply(f, a).iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// Largest `|L(f, a)|` entry with the row scaling undone, i.e. the
    /// largest stencil residual of `Hess f - a g` over nodes and pairs.
    pub fn max_unscaled_residual(&self, f: &[f64], a: &[f64]) -> f64 {
        let m = self.rows_per_node();
        self.apply(f, a)
            .iter()
            .enumerate()
            .map(|(r, v)| (v / self.row_scale[r / m]).abs())
            .fold(0.0, f64::max)
    }

    /// Node values of expression candidates.
    pub fn sample(&self, f: &ScalarExpr, a: &ScalarExpr) -> Result<(Vec<f64>, Vec<f64>)> {
        let pts: Vec<Vec<f64>> = self.grid.points().collect();
        let fv = pts.iter().map(|p| f.eval(p)).collect::<Result<Vec<_>>>()?;
        let av = pts.iter().map(|p| a.eval(p)).collect::<Result<Vec<_>>>()?;
        Ok((fv, av))
    }

    /// Least-squares optimal `a` at `node` for given `f`.
    pub fn optimal_a(&self, node: usize, f: &[f64]) -> f64 {
        let m = self.rows_per_node();
        let (mut num, mut den) = (0.0, 0.0);
        for r in node * m..(node + 1) * m {
            let rf: f64 = self.rows[r].iter().map(|(c, w)| w * f[*c]).sum();
            num += self.a_coef[r] * rf;
            den += self.a_coef[r] * self.a_coef[r];
        }
        -num / den
    }

    /// Rows of the operator with each node's `a` eliminated by least
    /// squares: `(I - c c^T / |c|^2) R_p`, as dense rows over `f`.
    pub fn reduced_rows(&self, node: usize) -> Vec<Vec<f64>> {
        let m = self.rows_per_node();
        let n = self.node_count();
        let c = &self.a_coef[node * m..(node + 1) * m];
        let cc: f64 = c.iter().map(|x| x * x).sum();
        let mut dense = vec![vec![0.0; n]; m];
        for (k, row) in self.rows[node * m..(node + 1) * m].iter().enumerate() {
            for (col, w) in row {
                dense[k][*col] += w;
            }
        }
        let mut proj = vec![0.0; n];
        for (k, row) in dense.iter().enumerate() {
            for (p, v) in proj.iter_mut().zip(row) {
                *p += c[k] * v / cc;
            }
        }
        for (k, row) in dense.iter_mut().enumerate() {
            for (v, p) in row.iter_mut().zip(&proj) {
                *v -= c[k] * p;
            }
        }
        dense
    }

    /// `M f` for the reduced operator.
    pub fn reduced_apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.rows_per_node();
        let mut out = Vec::with_capacity(self.row_count());
        for node in 0..self.node_count() {
            let a = self.optimal_a(node, f);
            for r in node * m..(node + 1) * m {
                out.push(self.rows[r].iter().map(|(c, w)| w * f[*c]).sum::<f64>() + self.a_coef[r] * a);
            }
        }
        out
    }

    /// `M^T y` for the reduced operator.
    pub fn reduced_apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let m = self.rows_per_node();
        let mut out = vec![0.0; self.node_count()];
        for node in 0..self.node_count() {
            let c = &self.a_coef[node * m..(node + 1) * m];
            let cc: f64 = c.iter().map(|x| x * x).sum();
            let yy = &y[node * m..(node + 1) * m];
            let cy: f64 = c.iter().zip(yy).map(|(a, b)| a * b).sum::<f64>() / cc;
            for (k, r) in (node * m..(node + 1) * m).enumerate() {
                let z = yy[k] - c[k] * cy;
                for (col, w) in &self.rows[r] {
                    out[*col] += w * z;
                }
            }
        }
        out
    }
}

/// Assembles `Hess f - a g` with Christoffel symbols from the metric.
pub fn assemble_hess_system(g: &MetricField, grid: &Grid) -> Result<HessSystem> {
    if grid.chart() != g.chart() {
        return Err(Error::Dimension("grid and metric must share one chart".into()));
    }
    if let Some(axis) = grid.counts().iter().position(|c| *c < MIN_NODES_PER_AXIS) {
        return Err(Error::GridTooCoarse(format!(
            "axis {axis} has {} nodes, need at least {MIN_NODES_PER_AXIS}",
            grid.counts()[axis]
        )));
    }
    let n = grid.dim();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let per_node: Vec<(Vec<Vec<(usize, f64)>>, Vec<f64>, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let p = grid.point(node);
            let m = g.at(&p)?;
            let gamma = Christoffel::from_metric(&m);
            let scale = 1.0 / m.g.norm();
            let d1: Vec<Vec<(usize, f64)>> = (0..n).map(|k| node_stencil(grid, node, k, 1)).collect();
            let mut rows = Vec::with_capacity(pairs.len());
            let mut a_coef = Vec::with_capacity(pairs.len());
            for &(i, j) in &pairs {
                let mut e = if i == j {
                    node_stencil(grid, node, i, 2)
                } else {
                    mixed_stencil(grid, node, i, j)
                };
                for (k, st) in d1.iter().enumerate() {
                    let gk = gamma.get(k, i, j);
                    if gk != 0.0 {
                        e.extend(st.iter().map(|(c, w)| (*c, -gk * w)));
                    }
                }
                let e = compress(e).into_iter().map(|(c, w)| (c, w * scale)).collect();
                rows.push(e);
                a_coef.push(-m.g[(i, j)] * scale);
            }
            Ok((rows, a_coef, scale))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(grid.len() * pairs.len());
    let mut a_coef = Vec::with_capacity(grid.len() * pairs.len());
    let mut row_scale = Vec::with_capacity(grid.len());
    for (r, c, s) in per_node {
        rows.extend(r);
        a_coef.extend(c);
        row_scale.push(s);
    }
    Ok(HessSystem {
        grid: grid.clone(),
        pairs,
        rows,
        a_coef,
        row_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, GridSpec};

    fn apply_axis(count: usize, periodic: bool, h: f64, order: u8, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..count)
            .map(|i| {
                axis_stencil(count, periodic, h, i, order)
                    .iter()
                    .map(|(k, w)| w * f(*k as f64 * h))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn stencils_are_exact_on_quadratics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x;
        for (i, d) in apply_axis(6, false, 0.3, 1, f).iter().enumerate() {
            assert!((d - (-2.0 + i as f64 * 0.3)).abs() < 1e-12);
        }
        for d in apply_axis(6, false, 0.3, 2, f) {
            assert!((d - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn periodic_stencils_wrap() {
        let st = axis_stencil(5, true, 1.0, 0, 1);
        assert_eq!(st, vec![(4, -0.5), (1, 0.5)]);
        let st = axis_stencil(5, true, 1.0, 4, 2);
        assert_eq!(st, vec![(3, 1.0), (4, -2.0), (0, 1.0)]);
    }

    #[test]
    fn shape_and_quadratic_exactness() {
        let chart = Chart::bounded(&["t", "x", "y"], &[[-1.0, 1.0]; 3]).unwrap();
        let g = MetricField::euclidean(&chart);
        let grid = Grid::new(&chart, &GridSpec::uniform(3, 5)).unwrap();
        let sys = assemble_hess_system(&g, &grid).unwrap();
        assert_eq!(sys.row_count(), 125 * 6);
        assert_eq!(sys.unknown_count(), 250);
        let names = chart.coord_names();
        let one = ScalarExpr::parse("1", names).unwrap();
        let zero = ScalarExpr::parse("0", names).unwrap();
        let (f, a) = sys.sample(&one, &zero).unwrap();
        assert!(sys.residual_norm(&f, &a) < 1e-12);
        let q = ScalarExpr::parse("(t^2 + x^2 + y^2)/2", names).unwrap();
        let (f, a) = sys.sample(&q, &one).unwrap();
        assert!(sys.max_unscaled_residual(&f, &a) < 1e-10);
        let (f, _) = sys.sample(&q, &one).unwrap();
        assert!((0..sys.node_count()).all(|k| (sys.optimal_a(k, &f) - 1.0).abs() < 1e-10));
    }

    #[test]
    fn reduced_transpose_is_adjoint() {
        let chart = Chart::bounded(&["x", "y"], &[[0.5, 1.5], [0.2, 1.0]]).unwrap();
        let g = MetricField::parse(&chart, &[(0, 0, "1 + x*y"), (1, 1, "x^2"), (0, 1, "0.1*y")]).unwrap();
        let grid = Grid::new(&chart, &GridSpec::uniform(2, 5)).unwrap();
        let sys = assemble_hess_system(&g, &grid).unwrap();
        let f: Vec<f64> = (0..sys.node_count()).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..sys.row_count()).map(|i| (i as f64 * 1.3).cos()).collect();
        let mf = sys.reduced_apply(&f);
        let mty = sys.reduced_apply_transpose(&y);
        let lhs: f64 = mf.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.iter().zip(&mty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        let dense: Vec<f64> = (0..sys.node_count())
            .flat_map(|k| sys.reduced_rows(k))
            .map(|row| row.iter().zip(&f).map(|(a, b)| a * b).sum())
            .collect();
        assert!(dense.iter().zip(&mf).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let chart = Chart::bounded(&["x", "y"], &[[0.0, 1.0]; 2]).unwrap();
        let g = MetricField::euclidean(&chart);
        let grid = Grid::new(&chart, &GridSpec { counts: vec![5, 4], margin: 0.0 }).unwrap();
        assert!(matches!(assemble_hess_system(&g, &grid), Err(Error::GridTooCoarse(_))));
    }
}
