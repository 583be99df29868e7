//! Command-line front end for simulating heralded atom-cluster generation:
//! configuration, seeded parallel sampling and CSV/JSON reports.

pub mod batch;
pub mod commands;
pub mod config;
pub mod error;
pub mod netdoc;
pub mod report;

pub use commands::{execute, Command, Invocation};
pub use error::{CliError, CliResult};
pub use report::{Format, Report};
