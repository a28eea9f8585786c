//! Orlicz-space numerics on finite dyadic measure spaces.

// `!(x > 0.0)` is the NaN-rejecting form used for every domain check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod condexp;
pub mod convergence;
pub mod error;
pub mod measure;
mod numeric;
pub mod orlicz;
pub mod scenario;
pub mod young;

pub use error::{Error, Result};
