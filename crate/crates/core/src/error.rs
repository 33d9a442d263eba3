use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("node {index} is not on the grid ({count} nodes)")]
    NodeOffGrid { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("curvature must be strictly negative, found {value} at node {node}")]
    CurvatureNotNegative { value: f64, node: usize },

    #[error("circle map is not strictly increasing at sample {index}")]
    NotMonotone { index: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("map value {value} at node {node} lies outside the interpolation domain")]
    OutsideDomain { node: usize, value: f64 },

    #[error("iterate escaped the disk {count} times")]
    EscapedDisk { count: usize },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
