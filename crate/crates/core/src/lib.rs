//! Verification toolkit for sprays and curvature of spherically symmetric
//! Finsler surfaces.

// index loops mirror the tensor formulas; NaN-aware negated comparisons are deliberate
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::type_complexity
)]

pub mod curvature;
pub mod error;
pub mod expr;
pub mod fd;
pub mod jet;
pub mod kernel;
pub mod metric;
pub mod params;
pub mod quad;
pub mod report;
pub mod sample;
pub mod spray;
pub mod verify;

pub use error::{Error, Result};
