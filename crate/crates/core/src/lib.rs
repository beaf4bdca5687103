//! Numerical core for adding a line soliton to a small KP-II solution.
//!
//! Everything here is `no_std` (with `alloc`) and single threaded, so results
//! are bitwise reproducible for a given grid. Fields live on a uniform
//! rectangular window whose x-axis is periodic for spectral work; y is
//! treated as a marching direction by the parabolic solvers.

#![no_std]
// The `Float` imports are shadowed by f64's inherent methods whenever std is
// in the crate graph (tests, or dev-dependencies enabling num-traits/std).
#![allow(unused_imports)]
// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod backlund;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod grid;
pub mod heat;
pub mod miura;
pub mod phi;
pub mod profiles;
pub mod quad;
pub mod spectral;
pub mod tau;

pub use error::{Error, Result};
pub use grid::{Field2D, Grid2D, Meta, NormReport, ShiftCurve};
