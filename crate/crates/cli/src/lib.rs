//! Scenario files, metrics output and the command implementations behind
//! the `rpm3` binary.

pub mod audit;
pub mod error;
pub mod matrix_io;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use error::{CliError, Result};
