//! File formats, reports, parallel Monte Carlo and the command-line front
//! end for `dichotomy-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod oracle_check;
pub mod parallel;
pub mod report;
pub mod spec_file;

pub use spec_file::{parse_spec, read_spec, spec_to_json, SpecError};
