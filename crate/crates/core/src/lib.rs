//! Numerical laboratory for discretized loop calculus.
//!
//! Polygonal loops in closed-form velocity fields, the vertex-differential
//! operators acting on the loop functional `exp(i gamma/nu Gamma)`, the
//! regularized Biot-Savart operator, momentum-variable systems and the
//! star-polygon Euler ensemble, plus the scans that measure their error terms.

// `!(x > 0.0)` is used on purpose so NaN is rejected; index loops mirror the tensor formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod fields;
pub mod fd;
pub mod circulation;
pub mod biot_savart;
pub mod operators;
pub mod momentum;
pub mod obstruction;
pub mod ensemble;
pub mod gaussian;
pub mod kelvin;
pub mod par;
pub mod experiments;

pub use error::{Error, Result};
pub use geometry::{CVec3, PolygonalLoop, SampledCurve, Vec3};
