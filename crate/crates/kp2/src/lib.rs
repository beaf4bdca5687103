//! Field files, the command-line front end and the acceptance suite built
//! on `kp2-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod inputs;
pub mod io;
pub mod verify;

pub use error::CliError;
