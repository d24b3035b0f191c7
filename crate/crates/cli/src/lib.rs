//! Command-line front end for the `corecheck` library: instance files,
//! clustering specs, run reports and SVG plots.
//!
//! Exit codes: 0 on success or when a result is within expectation, 1 for
//! semantic failures (axiom violations, out-of-range bounds, invalid
//! clusterings), 2 for unreadable or malformed input.

// index loops read better than iterator chains in the matrix code
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering_spec;
mod commands;
pub mod format;
pub mod plot;
pub mod report;

pub use commands::{run, EXIT_FAIL, EXIT_INPUT, EXIT_OK, TOL_ENV};
