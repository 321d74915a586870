//! Command-line runner for `penalab-core`: configuration, a thread-pool
//! executor, and the CSV/JSON result files.

pub mod cli;
pub mod config;
pub mod exec;
pub mod output;
pub mod vspec;
