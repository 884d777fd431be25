//! Command line front end for `fluxdirac`: a TOML run configuration, one
//! function per subcommand and the verification suite.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, Result};
