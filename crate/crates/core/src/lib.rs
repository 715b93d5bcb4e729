//! Riemannian tensor calculus on coordinate charts for studying Codazzi
//! tensors with two eigenvalue functions.
//!
//! The crate is organized bottom-up:
//!
//! - [`expr`]: parsed scalar-field expressions with exact second-order
//!   forward-mode derivatives;
//! - [`geometry`]: charts, grids, metrics, Christoffel symbols, Hessians,
//!   brackets, geodesics and pullbacks;
//! - [`codazzi`]: the Codazzi identity, pointwise eigenstructure, the
//!   eigendistribution identities and the four warped-product conditions;
//! - [`brinkmann`]: a discretized `Hess f = a g` solver that decides whether
//!   a metric is locally a warped product with one-dimensional base;
//! - [`gallery`]: the two-eigenvalue metric family, named examples, the
//!   classification forms of `mu` and the characteristics residual;
//! - [`cli`]: run configs, JSON/CSV reports and the command driver used by
//!   the `codazzi-lab` binary.
//!
//! Runnable walkthroughs live in this crate's `examples/` directory.

pub mod brinkmann;
pub mod cli;
pub mod codazzi;
pub mod error;
pub mod expr;
pub mod gallery;
pub mod geometry;
pub mod tolerances;

pub use error::{Error, Result};
pub use expr::{Jet2, ScalarExpr};
pub use geometry::{Chart, Grid, GridSpec, MetricField, SymTensorField, VectorField};
