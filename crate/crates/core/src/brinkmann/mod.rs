//! Detection of warped-product structure with a one-dimensional base.
//!
//! A metric is locally such a warped product iff `Hess f = a g` has a
//! solution with `grad f != 0`. The equation is discretized on a grid with
//! `f` and `a` unknown at every node, the numerical kernel is extracted by
//! SVD, and the kernel is classified by the gradient of its non-constant
//! members at a probe point.
//!
//! Equations are imposed at every node. Bounded axes use one-sided
//! second-order stencils at their end nodes, so boundary values are
//! constrained like interior ones and the kernel of a flat metric is exactly
//! the five-dimensional continuum solution space.
//!
//! Each node's `a` enters only that node's rows, so it is eliminated by
//! per-node least squares before the SVD; the reduced operator acts on `f`
//! alone and `a` is recovered afterwards.
//!
//! A trivial numerical kernel is evidence at grid resolution on the chosen
//! box, not a proof of the local statement.

pub mod classify;
pub mod kernel;
pub mod system;

use serde::Serialize;

pub use classify::{
    classify_warped, fit_quadratic, verify_candidate, write_certificate_csv, Certificate, PolynomialFit, Verdict,
    WarpVerdict,
};
pub use kernel::{kernel_basis, kernel_basis_with, KernelBasis, KernelMethod, KernelOptions};
pub use system::{assemble_hess_system, HessSystem};

use crate::error::Result;
use crate::geometry::{Grid, MetricField};

/// Assembly, kernel extraction and classification in one call.
#[derive(Debug, Clone, Serialize)]
pub struct Detection {
    pub rows: usize,
    pub unknowns: usize,
    pub kernel_dimension: usize,
    pub method: KernelMethod,
    pub singular_tail: Vec<f64>,
    pub sigma_max: f64,
    pub threshold: f64,
    pub kernel_residuals: Vec<f64>,
    pub verdict: WarpVerdict,
}

pub fn detect_warped(
    g: &MetricField,
    grid: &Grid,
    probe: &[f64],
    sigma_rel_tol: f64,
    grad_tol: f64,
    seed: u64,
) -> Result<(Detection, KernelBasis)> {
    let sys = assemble_hess_system(g, grid)?;
    let basis = kernel_basis_with(
        &sys,
        &KernelOptions {
            sigma_rel_tol,
            seed,
            ..KernelOptions::default()
        },
    )?;
    let verdict = classify_warped(&basis, &sys, g, probe, grad_tol, seed)?;
    Ok((
        Detection {
            rows: sys.row_count(),
            unknowns: sys.unknown_count(),
            kernel_dimension: basis.dimension(),
            method: basis.method,
            singular_tail: basis.singular_tail.clone(),
            sigma_max: basis.sigma_max,
            threshold: basis.threshold,
            kernel_residuals: basis.residuals.clone(),
            verdict,
        },
        basis,
    ))
}
