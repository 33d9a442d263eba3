// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle;
pub mod continuation;
pub mod diagnostics;
pub mod douady_earle;
pub mod error;
pub mod geodesic;
pub mod grid;
pub mod harmonic;
pub mod io;
pub(crate) mod linalg;
pub mod metric;
pub mod specs;

pub use error::{Error, Result};
