//! File formats, IO and the command line for the CSI movement detector.
//! The signal processing lives in `csimotion_core`.

// `!(a < b)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod formats;
pub mod io;
pub mod report;

pub use error::Error;
