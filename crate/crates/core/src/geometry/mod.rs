//! Charts, metrics, the Levi-Civita connection and the operations built on
//! it: covariant derivatives, Hessians, Lie brackets, geodesics and
//! pullbacks along coordinate changes.

pub mod chart;
pub mod connection;
pub mod fields;
pub mod geodesic;
pub mod pullback;

pub use chart::{Chart, Grid, GridSpec};
pub use connection::{
    christoffel_at, christoffel_family_closed_form, covariant_derivative, covariant_derivative_all,
    covariant_derivative_vector, hessian_family_closed_form, hessian_scalar, lie_bracket, Christoffel,
};
pub use fields::{CoordinateMap, MetricAt, MetricField, SymField, SymJet, SymTensorField, VectorField};
pub use geodesic::{acceleration_residual, integrate_geodesic, Trajectory};
pub use pullback::pullback_metric;
