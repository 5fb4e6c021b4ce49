//! File formats, the study driver and the command-line front end for
//! `nhgibbs-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod spec;
pub mod study;

pub use error::{CliError, Result};
