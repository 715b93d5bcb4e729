use faer::Mat;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::system::HessSystem;
use crate::error::{Error, Result};
use crate::tolerances::DENSE_SVD_LIMIT;

/// How the kernel was extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    DenseSvd,
    ChebyshevSubspace,
}

/// Orthonormal basis of the numerical kernel of `Hess f - a g`.
///
/// Vector `k` is `(f[k], a[k])` with unit joint Euclidean norm. The first
/// vector is always the constant `f`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelBasis {
    pub f: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    /// Smallest singular values of the reduced operator, ascending.
    pub singular_tail: Vec<f64>,
    pub sigma_max: f64,
    pub threshold: f64,
    /// `|L(f, a)|` for each basis vector.
    pub residuals: Vec<f64>,
    pub method: KernelMethod,
    pub iterations: usize,
}

impl KernelBasis {
    pub fn dimension(&self) -> usize {
        self.f.len()
    }
}

/// Options for [`kernel_basis_with`].
#[derive(Debug, Clone)]
pub struct KernelOptions {
    pub sigma_rel_tol: f64,
    /// Unknown count `2N` above which the iterative path is used.
    pub dense_limit: usize,
    pub seed: u64,
    /// Block size of the subspace iteration.
    pub block: usize,
    pub max_iterations: usize,
    /// Number of singular values reported in the tail.
    pub tail: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            sigma_rel_tol: crate::tolerances::SIGMA_REL_TOL,
            dense_limit: DENSE_SVD_LIMIT,
            seed: 0,
            block: 12,
            max_iterations: 400,
            tail: 12,
        }
    }
}

pub fn kernel_basis(sys: &HessSystem, sigma_rel_tol: f64) -> Result<KernelBasis> {
    kernel_basis_with(
        sys,
        &KernelOptions {
            sigma_rel_tol,
            ..KernelOptions::default()
        },
    )
}

pub fn kernel_basis_with(sys: &HessSystem, opts: &KernelOptions) -> Result<KernelBasis> {
    if sys.unknown_count() <= opts.dense_limit {
        dense(sys, opts)
    } else {
        iterative(sys, opts)
    }
}

/// Stacked QR of the reduced rows, then SVD of the triangular factor.
fn dense(sys: &HessSystem, opts: &KernelOptions) -> Result<KernelBasis> {
    let n = sys.node_count();
    let m = sys.rows_per_node();
    let nodes_per_chunk = n.div_ceil(m).max(1);
    let mut r: Mat<f64> = Mat::zeros(0, n);
    let mut node = 0;
    while node < n {
        let end = (node + nodes_per_chunk).min(n);
        let chunk: Vec<Vec<f64>> = (node..end).flat_map(|k| sys.reduced_rows(k)).collect();
        let rows = r.nrows() + chunk.len();
        let prev = r.nrows();
        let stacked = Mat::from_fn(rows, n, |i, j| if i < prev { r[(i, j)] } else { chunk[i - prev][j] });
        r = stacked.qr().thin_R().to_owned();
        node = end;
    }
    let svd = r.svd().map_err(|_| Error::ConvergenceFailure(0))?;
    let s = svd.S();
    let v = svd.V();
    let mut order: Vec<usize> = (0..s.dim()).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let sigma_max = order.last().map_or(0.0, |&i| s[i]);
    let threshold = opts.sigma_rel_tol * sigma_max;
    let kernel: Vec<Vec<f64>> = order
        .iter()
        .take_while(|&&i| s[i] < threshold)
        .map(|&i| (0..n).map(|row| v[(row, i)]).collect())
        .collect();
    let tail = order.iter().take(opts.tail).map(|&i| s[i]).collect();
    Ok(finish(sys, kernel, tail, sigma_max, threshold, KernelMethod::DenseSvd, 0))
}

fn orthonormalize(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let k = x.ncols();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let d = x.column(i).dot(&x.column(j));
                let ci = x.column(i).clone_owned();
                x.column_mut(j).axpy(-d, &ci, 1.0);
            }
        }
        let nrm = x.column(j).norm();
        x.column_mut(j).scale_mut(1.0 / nrm);
    }
    x
}

fn normal_apply(sys: &HessSystem, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        let col: Vec<f64> = x.column(j).iter().copied().collect();
        let y = sys.reduced_apply_transpose(&sys.reduced_apply(&col));
        out.set_column(j, &DVector::from_vec(y));
    }
    out
}

/// Chebyshev filter of degree `degree` damping `[cut, upper]` of `M^T M`.
fn chebyshev_filter(sys: &HessSystem, x: &DMatrix<f64>, degree: usize, cut: f64, upper: f64) -> DMatrix<f64> {
    let e = (upper - cut) / 2.0;
    let c = (upper + cut) / 2.0;
    let mut sigma = e / (0.0 - c);
    let tau = 2.0 / sigma;
    let mut prev = x.clone();
    let mut cur = (normal_apply(sys, x) - x * c) * (sigma / e);
    for _ in 1..degree {
        let next_sigma = 1.0 / (tau - sigma);
        let next = (normal_apply(sys, &cur) - &cur * c) * (2.0 * next_sigma / e) - &prev * (sigma * next_sigma);
        prev = cur;
        cur = next;
        sigma = next_sigma;
    }
    cur
}

/// Rayleigh-Ritz on `M^T M`; returns rotated basis and ascending values.
fn rayleigh_ritz(sys: &HessSystem, x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let bx = normal_apply(sys, x);
    let h = x.transpose() * bx;
    let h = (&h + h.transpose()) * 0.5;
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let q = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let vals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    (x * q, vals)
}

/// Chebyshev-filtered subspace iteration for the smallest singular
/// subspace of the reduced operator. Deterministic for a fixed seed.
fn iterative(sys: &HessSystem, opts: &KernelOptions) -> Result<KernelBasis> {
    let n = sys.node_count();
    let k = opts.block.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut upper = 0.0;
    for _ in 0..60 {
        let w = sys.reduced_apply_transpose(&sys.reduced_apply(&v));
        let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        upper = nrm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / nrm).collect();
    }
    let sigma_max = upper.sqrt();
    let upper = upper * 1.05;
    let threshold = opts.sigma_rel_tol * sigma_max;

    let x = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
    let (mut x, mut theta) = rayleigh_ritz(sys, &orthonormalize(x));
    let degree = 40;
    let mut stable = 0;
    let mut last_count = usize::MAX;
    let mut last_worst = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let cut = theta[k - 1].max(upper * 1e-14);
        let y = chebyshev_filter(sys, &x, degree, cut, upper);
        (x, theta) = rayleigh_ritz(sys, &orthonormalize(y));
        let sig: Vec<f64> = (0..k)
            .map(|j| {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                sys.reduced_apply(&col).iter().map(|r| r * r).sum::<f64>().sqrt()
            })
            .collect();
        let count = sig.iter().filter(|s| **s < threshold).count();
        let guard_ok = count < k && {
            let col: Vec<f64> = x.column(count).iter().copied().collect();
            let b = sys.reduced_apply_transpose(&sys.reduced_apply(&col));
            let res: f64 = b
                .iter()
                .zip(&col)
                .map(|(bi, ci)| (bi - theta[count] * ci).powi(2))
                .sum::<f64>()
                .sqrt();
            res <= 1e-3 * theta[count]
        };
        // Once the count is settled, keep filtering while the kernel
        // residuals still shrink.
        let worst = sig.iter().take(count).copied().fold(0.0, f64::max);
        let refined = worst <= 1e3 * f64::EPSILON * sigma_max || worst > 0.5 * last_worst;
        last_worst = worst;
        stable = if count == last_count && guard_ok { stable + 1 } else { 0 };
        last_count = count;
        if stable >= 2 && refined {
            let kernel = (0..count).map(|j| x.column(j).iter().copied().collect()).collect();
            let mut tail = sig.clone();
            tail.sort_by(f64::total_cmp);
            tail.truncate(opts.tail);
            return Ok(finish(sys, kernel, tail, sigma_max, threshold, KernelMethod::ChebyshevSubspace, it));
        }
    }
    Err(Error::ConvergenceFailure(opts.max_iterations))
}

/// Puts the constant first, orthogonalizes the rest against it, recovers
/// `a` per node and re-orthonormalizes in the joint `(f, a)` space.
fn finish(
    sys: &HessSystem,
    kernel: Vec<Vec<f64>>,
    singular_tail: Vec<f64>,
    sigma_max: f64,
    threshold: f64,
    method: KernelMethod,
    iterations: usize,
) -> KernelBasis {
    let n = sys.node_count();
    let c = 1.0 / (n as f64).sqrt();
    let mut rest: Vec<Vec<f64>> = Vec::new();
    if !kernel.is_empty() {
        let k = kernel.len();
        let mut mat = DMatrix::from_fn(n, k, |i, j| kernel[j][i]);
        for mut col in mat.column_iter_mut() {
            let d: f64 = col.iter().sum::<f64>() * c;
            col.add_scalar_mut(-d * c);
        }
        let svd = mat.svd(true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        for &j in &order {
            if svd.singular_values[j] > 0.5 {
                rest.push(u.column(j).iter().copied().collect());
            }
        }
    }
    let mut f = vec![vec![c; n]];
    let mut a = vec![vec![0.0; n]];
    for fv in rest {
        let av: Vec<f64> = (0..n).map(|node| sys.optimal_a(node, &fv)).collect();
        let mut joint: Vec<f64> = fv.iter().chain(&av).copied().collect();
        for _ in 0..2 {
            for (bf, ba) in f.iter().zip(&a) {
                let d: f64 = bf.iter().chain(ba).zip(&joint).map(|(x, y)| x * y).sum();
                for (j, b) in joint.iter_mut().zip(bf.iter().chain(ba)) {
                    *j -= d * b;
                }
            }
        }
        let nrm = joint.iter().map(|x| x * x).sum::<f64>().sqrt();
        joint.iter_mut().for_each(|x| *x /= nrm);
        a.push(joint[n..].to_vec());
        joint.truncate(n);
        f.push(joint);
    }
    for (fv, av) in f.iter_mut().zip(a.iter_mut()).skip(1) {
        let lead = fv.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
        if lead < 0.0 {
            fv.iter_mut().chain(av.iter_mut()).for_each(|x| *x = -*x);
        }
    }
    let residuals = f.iter().zip(&a).map(|(fv, av)| sys.residual_norm(fv, av)).collect();
    KernelBasis {
        f,
        a,
        singular_tail,
        sigma_max,
        threshold,
        residuals,
        method,
        iterations,
    }
}
