//! Numerical toolkit for the Grushin operator on the two-sphere.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod numeric;
pub mod spectral;

pub use error::{Error, Result};
