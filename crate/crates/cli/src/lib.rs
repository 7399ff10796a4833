//! Experiment drivers behind the `axiomscope` command-line tool.

pub mod drivers;
pub mod error;
pub mod input;
pub mod stats;

pub use error::{CliError, Result};
