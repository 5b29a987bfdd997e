//! Batch front-end for the `vstop` solvers: TOML run configs in, CSV
//! artifacts and text reports out.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod expr;

pub use commands::{run, Command, Outcome, EXIT_DIVERGED, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_VERIFY_FAILED};
pub use config::{Problem, RunConfig};
pub use error::CliError;
pub use expr::{Expr, ParseError};
