//! Experiment runner for qudit Bell sampling.
//!
//! Parses the command line, draws input states, runs the learning and testing
//! algorithms over seeded trials and assembles byte-deterministic JSON reports.
//! Also emits exact oracle tables, the tolerant-tester range figure, and runs
//! the acceptance suite.

pub mod acceptance;
pub mod args;
pub mod commands;
pub mod error;
pub mod fig;
pub mod inputs;
pub mod io;
pub mod report;

pub use args::{Cli, Command};
pub use commands::{output_path, render};
pub use error::{CliError, Result};
