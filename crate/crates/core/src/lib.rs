//! Calibration functions for multiclass surrogate losses.
//!
//! The crate evaluates surrogate losses and their pointwise risks, computes
//! binary calibration functions in closed form and numerically, runs a
//! brute-force oracle for the maximum calibration function at small class
//! counts, audits the reduction conditions used to lower-bound it, and turns
//! surrogate excess-risk bounds into 0-1 excess-risk bounds.
//!
//! Class indices are 0-based throughout the Rust API.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod conditions;
pub mod conversion;
mod error;
pub mod experiments;
pub mod losses;
pub mod optimize;
pub mod spec_io;

pub use error::{Error, Result};
