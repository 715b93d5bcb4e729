//! The Codazzi identity and the structure theory of Codazzi tensors with
//! two eigenvalue functions: pointwise eigen-data, the eigendistribution
//! identities, the four equivalent warped-product conditions and warp
//! extraction.
//!
//! Grid sweeps are data-parallel; aggregation happens in grid order so
//! reports are deterministic.

pub mod conditions;
pub mod eigen;
pub mod lemmas;
pub mod report;
pub mod residual;
pub mod warp;

pub use conditions::{char_conditions, ConditionReport, CONDITION_NAMES};
pub use eigen::{eigen_at, eigen_structure, two_cluster_at, EigenStructure, PointClass, PointEigen, TwoCluster};
pub use lemmas::{grid_diagnostics, lemma_residual, point_diagnostics, Lemma, PointDiagnostics};
pub use report::ResidualReport;
pub use residual::{codazzi_residual, codazzi_residual_at};
pub use warp::{eta_and_warp_extract, WarpExtraction, BASE_AXIS};
