//! File formats, configuration and command orchestration for `vicscore`.
//!
//! The numerical work lives in `vicscore-core`; this crate reads cohorts,
//! writes artifacts and maps failures onto exit codes.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use error::{CliError, CliResult};
