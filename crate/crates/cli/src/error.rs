use crate::config::SchemaError;
use std::path::PathBuf;
use symflow_core::diagnostics::DiagnosticsError;
use symflow_core::flow::FlowError;
use symflow_core::mesh::MeshError;
use symflow_core::surface::SurfaceError;
use thiserror::Error;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitCode {
    Success = 0,
    Io = 1,
    Schema = 2,
    BlowUp = 3,
    Numerical = 4,
    CriteriaFailed = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("configuration error at {0}")]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io { .. } | CliError::Format { .. } => ExitCode::Io,
            CliError::Schema(_) => ExitCode::Schema,
            CliError::Flow(FlowError::BlowUp { .. } | FlowError::NonFinite { .. }) => ExitCode::BlowUp,
            CliError::Flow(FlowError::InvalidConfig(_)) => ExitCode::Schema,
            CliError::Flow(_) | CliError::Diagnostics(_) | CliError::Surface(_) | CliError::Mesh(_) => {
                ExitCode::Numerical
            }
        }
    }
}
