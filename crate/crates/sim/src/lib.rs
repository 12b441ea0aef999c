//! File formats, configuration and the `hom` command line for the
//! `hom-core` models.

pub mod cli;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod scan;
pub mod scan_csv;

pub use error::{ConfigError, Result, SimError};
