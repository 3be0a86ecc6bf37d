//! Numerical toolkit for variable-exponent Lebesgue spaces with weights.
//!
//! Functions live on uniform grids over boxes in one or two dimensions and
//! every integral is a trapezoid sum, so norm inequalities that hold for
//! positive measures hold exactly for the discrete objects.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops in the
// kernels walk several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exponent;
pub mod field;
pub mod interp;
pub mod maximal;
pub mod norms;
pub mod par;
pub mod rk;
pub mod weights;

pub use error::{Error, Result};
