use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::residual::check_charts;
use crate::error::{Error, Result};
use crate::geometry::{Grid, MetricAt, MetricField, SymTensorField};

/// Cluster pattern of the eigenvalues at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointClass {
    /// One simple eigenvalue `mu` at sorted position `mu_index` and one
    /// eigenvalue `lambda` of multiplicity `n - 1`.
    TwoCluster { mu_index: usize },
    /// All eigenvalues in one cluster.
    Merged,
    Other,
}

/// Solution of `A v = kappa g v` at one point.
#[derive(Debug, Clone)]
pub struct PointEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are g-orthonormal eigenvectors matching `values`.
    pub vectors: DMatrix<f64>,
    /// `(start, len)` ranges into `values`.
    pub clusters: Vec<(usize, usize)>,
    pub class: PointClass,
}

impl PointEigen {
    pub fn mu_index(&self) -> Option<usize> {
        match self.class {
            PointClass::TwoCluster { mu_index } => Some(mu_index),
            _ => None,
        }
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu_index().map(|i| self.values[i])
    }

    /// Mean of the `(n-1)`-fold cluster.
    pub fn lambda(&self) -> Option<f64> {
        let m = self.mu_index()?;
        let (sum, count) = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != m)
            .fold((0.0, 0), |(s, c), (_, v)| (s + v, c + 1));
        Some(sum / count as f64)
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }

    pub fn mu_vector(&self) -> Option<Vec<f64>> {
        self.mu_index().map(|i| self.vector(i))
    }

    /// g-orthonormal basis of the `lambda` eigenspace.
    pub fn lambda_frame(&self) -> Option<Vec<Vec<f64>>> {
        let m = self.mu_index()?;
        Some((0..self.values.len()).filter(|i| *i != m).map(|i| self.vector(i)).collect())
    }

    fn flip(&mut self, i: usize) {
        let mut c = self.vectors.column_mut(i);
        c.neg_mut();
    }

    /// `max |A v - kappa g v|` over eigenpairs.
    pub fn pair_residual(&self, a: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
        (0..self.values.len())
            .map(|i| {
                let v = self.vectors.column(i);
                (a * v - g * v * self.values[i]).amax()
            })
            .fold(0.0, f64::max)
    }

    /// `max |A - sum kappa (g v)(g v)^T|`.
    pub fn reconstruction_residual(&self, a: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
        let mut r = a.clone();
        for i in 0..self.values.len() {
            let gv = g * self.vectors.column(i);
            r -= &gv * gv.transpose() * self.values[i];
        }
        r.amax()
    }

    /// `max |g(v_i, v_j) - delta_ij|`.
    pub fn orthonormality_defect(&self, g: &DMatrix<f64>) -> f64 {
        let n = self.values.len();
        (self.vectors.transpose() * g * &self.vectors - DMatrix::identity(n, n)).amax()
    }
}

/// Single-linkage clustering of sorted values with relative gap `tol`.
pub fn cluster(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= tol * scale {
            out.push((start, i - start));
            start = i;
        }
    }
    out
}

fn classify(n: usize, clusters: &[(usize, usize)]) -> PointClass {
    match clusters {
        [_] => PointClass::Merged,
        [(s0, l0), (s1, l1)] if n >= 3 => {
            if *l0 == 1 {
                PointClass::TwoCluster { mu_index: *s0 }
            } else if *l1 == 1 {
                PointClass::TwoCluster { mu_index: *s1 }
            } else {
                PointClass::Other
            }
        }
        _ => PointClass::Other,
    }
}

/// Generalized symmetric eigenproblem via Cholesky reduction.
pub fn eigen_from_matrices(a: &DMatrix<f64>, g: &MetricAt, cluster_tol: f64) -> PointEigen {
    let n = a.nrows();
    let l = g.cholesky.l();
    let la = l.solve_lower_triangular(a).expect("Cholesky factor is invertible");
    let m = l
        .solve_lower_triangular(&la.transpose())
        .expect("Cholesky factor is invertible");
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt = l.transpose();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let w: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let v = lt.solve_upper_triangular(&w).expect("Cholesky factor is invertible");
        vectors.set_column(c, &v);
    }
    let clusters = cluster(&values, cluster_tol);
    let class = classify(n, &clusters);
    let mut out = PointEigen {
        values,
        vectors,
        clusters,
        class,
    };
    for i in 0..n {
        let col = out.vectors.column(i);
        let big = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if big < 0.0 {
            out.flip(i);
        }
    }
    out
}

pub fn eigen_at(a: &SymTensorField, g: &MetricField, p: &[f64], cluster_tol: f64) -> Result<PointEigen> {
    let m = g.at(p)?;
    Ok(eigen_from_matrices(&a.values(p)?, &m, cluster_tol))
}

/// Two-eigenvalue data at a single point.
#[derive(Debug, Clone)]
pub struct TwoCluster {
    pub mu: f64,
    pub lambda: f64,
    /// Unit `mu` eigenvector.
    pub x: Vec<f64>,
    /// g-orthonormal `lambda` eigenvectors.
    pub frame: Vec<Vec<f64>>,
}

impl TwoCluster {
    pub fn from_point(e: &PointEigen, p: &[f64]) -> Result<Self> {
        match e.class {
            PointClass::TwoCluster { .. } => Ok(Self {
                mu: e.mu().unwrap_or_default(),
                lambda: e.lambda().unwrap_or_default(),
                x: e.mu_vector().unwrap_or_default(),
                frame: e.lambda_frame().unwrap_or_default(),
            }),
            _ => Err(Error::ClusterAmbiguity(p.to_vec())),
        }
    }
}

/// Fails with [`Error::ClusterAmbiguity`] unless `p` has exactly one
/// simple and one `(n-1)`-fold eigenvalue.
pub fn two_cluster_at(a: &SymTensorField, g: &MetricField, p: &[f64], cluster_tol: f64) -> Result<TwoCluster> {
    TwoCluster::from_point(&eigen_at(a, g, p, cluster_tol)?, p)
}

/// Per-node eigen-data over a grid.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    pub grid: Grid,
    pub cluster_tol: f64,
    /// `None` for excluded nodes.
    pub points: Vec<Option<PointEigen>>,
    /// Whether the simple eigenvector at a node was flipped to match its
    /// predecessor in the alignment sweep.
    pub sign_flipped: Vec<bool>,
    pub excluded_degenerate: usize,
    pub excluded_ambiguous: usize,
    /// Some node has the one-simple, one-(n-1)-fold pattern.
    pub two_eigenvalue: bool,
}

impl EigenStructure {
    pub fn two_cluster(&self, node: usize) -> Option<TwoCluster> {
        let pe = self.points[node].as_ref()?;
        TwoCluster::from_point(pe, &[]).ok()
    }

    pub fn included(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }
}

/// Solves the eigenproblem at every node, clusters, and aligns the signs of
/// simple eigenvectors by a sweep in grid order.
///
/// When some node has two-cluster structure, every other non-degenerate
/// node counts as ambiguous and is excluded. Otherwise all nodes are kept
/// and `two_eigenvalue` is false.
pub fn eigen_structure(a: &SymTensorField, g: &MetricField, grid: &Grid, cluster_tol: f64) -> Result<EigenStructure> {
    check_charts(a, g, grid)?;
    let mut points: Vec<Option<PointEigen>> = (0..grid.len())
        .into_par_iter()
        .map(|i| eigen_at(a, g, &grid.point(i), cluster_tol).ok())
        .collect();
    let excluded_degenerate = points.iter().filter(|p| p.is_none()).count();
    let two_eigenvalue = points
        .iter()
        .flatten()
        .any(|p| matches!(p.class, PointClass::TwoCluster { .. }));
    let mut excluded_ambiguous = 0;
    if two_eigenvalue {
        for p in points.iter_mut() {
            if p.as_ref().is_some_and(|e| e.mu_index().is_none()) {
                *p = None;
                excluded_ambiguous += 1;
            }
        }
    }
    let mut sign_flipped = vec![false; grid.len()];
    for i in 0..grid.len() {
        let Some(m) = points[i].as_ref().and_then(|e| e.mu_index()) else {
            continue;
        };
        let prev = (0..grid.dim()).rev().find_map(|axis| {
            let j = grid.neighbor(i, axis, -1)?;
            (j < i).then(|| points[j].as_ref().and_then(|e| e.mu_vector())).flatten()
        });
        if let Some(prev) = prev {
            let e = points[i].as_mut().expect("checked above");
            let dot: f64 = e.vectors.column(m).iter().zip(&prev).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                e.flip(m);
                sign_flipped[i] = true;
            }
        }
    }
    Ok(EigenStructure {
        grid: grid.clone(),
        cluster_tol,
        points,
        sign_flipped,
        excluded_degenerate,
        excluded_ambiguous,
        two_eigenvalue,
    })
}
