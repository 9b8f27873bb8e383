//! File formats, plots and the command-line front end for `fscinfo`.

pub mod error;
pub mod mrc;

pub use error::{CliError, Result};
pub mod curves;
pub mod plot;
pub mod emdb;
pub mod config;
pub mod inputs;
pub mod app;
