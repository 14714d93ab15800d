use thiserror::Error;

use crate::jet::{Caps, Multi};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("direction vector is zero")]
    ZeroDirection,

    #[error("point lies outside the positive cone: x1*y2 - x2*y1 = {cross}")]
    OrientationViolation { cross: f64 },

    #[error("x and y are (numerically) collinear: |cross| = {cross}")]
    CollinearInputs { cross: f64 },

    #[error("derivative {request} exceeds jet caps {caps}")]
    CapTooSmall { request: Multi, caps: Caps },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrand is singular near t = {at}")]
    SingularIntegrand { at: f64 },

    #[error("quadrature failed: estimated error {error:e} above tolerance {tol:e} after {intervals} intervals")]
    QuadratureFailure { error: f64, tol: f64, intervals: usize },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("fundamental tensor is degenerate: det = {det:e}")]
    DegenerateMetric { det: f64 },

    #[error("formula divides by s and |s| = {s:e} is too small")]
    SAxisSingular { s: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Errors raised by numerics at a particular point, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::Config(_)
        )
    }
}
