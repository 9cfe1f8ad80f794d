// Negated float comparisons are deliberate: NaN has to fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classes;
pub mod error;
pub mod exponent;
pub mod gauss;
pub mod harness;
pub mod hermite;
pub mod kernel;
pub mod maximal;
pub mod norms;
pub mod quad;
pub mod report;

pub use error::{Error, Result};
