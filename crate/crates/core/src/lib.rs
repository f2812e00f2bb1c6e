//! Numerical study of the isoperimetric behaviour of anisotropic half-spaces
//! under Grushin-type and step-two Carnot group measures.
//!
//! All quantities that can underflow are carried as [`LogValue`]s.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod carnot;
pub mod error;
pub mod functionals;
pub mod logvalue;
pub mod measures;
pub mod quadrature;
mod radial;
pub mod special;

pub use error::{Error, QuadratureError, Result};
pub use logvalue::{LogValue, Sign};
pub use measures::{GroupSpec, GrushinSpec, ProblemSpec};
pub use quadrature::QuadratureConfig;
