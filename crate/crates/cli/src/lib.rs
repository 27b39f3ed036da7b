//! Command-line front end for `pcrrr`: file formats, the model artifact and
//! the subcommand handlers.

pub mod artifact;
pub mod commands;
pub mod error;
pub mod io;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
