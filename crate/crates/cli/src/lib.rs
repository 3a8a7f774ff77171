//! Driver for the mean curvature flow of surfaces in four-manifolds: run
//! configurations and presets, output files, the 2-form verifier and the
//! density probe.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
pub mod presets;
pub mod probe;
pub mod run;
pub mod verify;

pub use config::{resolve, RunConfig, SchemaError};
pub use error::{CliError, ExitCode};
