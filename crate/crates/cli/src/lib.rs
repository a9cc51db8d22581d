//! Command-line front end for the Bratu VQA solver: configuration, the
//! `classical`, `solve`, `continue` and `compare` commands, and their CSV, JSON
//! and SVG outputs.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod svg;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
