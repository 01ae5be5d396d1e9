//! File formats, replica-parallel runner and command line for `online-hmm`
//! experiments.

pub mod cli;
pub mod config;
pub mod curve_csv;
pub mod error;
pub mod manifest;
pub mod params;
pub mod runner;

pub use error::{CliError, Result};
