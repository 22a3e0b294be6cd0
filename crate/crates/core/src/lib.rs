//! Interpolation certificates, constructive extensions and reproducing-kernel
//! diagnostics for weighted spaces of holomorphic functions on flat ℂⁿ and on
//! the hyperbolic ball.

// Negated comparisons are used on purpose so that NaN arguments are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod construction;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod pointset;
pub mod quadrature;
pub mod rkhs;
pub mod weights;

pub use error::{Error, Result};
pub use geometry::{ModelSpace, Point, SpaceKind};
