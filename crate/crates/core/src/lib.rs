//! Numerical twistor correspondence lab.

// `!(x > y)` is used on purpose to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod desitter;
pub mod error;
pub mod lift;
pub mod ode;
pub mod quad;
pub mod scattering;
pub mod sphere;
pub mod weld;
pub mod weyl;

pub use error::{Error, Result};
pub use num_complex::Complex64;
