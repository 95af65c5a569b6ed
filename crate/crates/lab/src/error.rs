use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Numerical(#[from] lqg_heat::Error),

    #[error("analysis failed: {message} (hint: {hint})")]
    Analysis { message: String, hint: &'static str },

    #[error("mass drift {drift:e} exceeds tolerance {tol:e}")]
    Conservation { drift: f64, tol: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("{failed} of {total} sweep runs failed")]
    SweepFailures { failed: usize, total: usize },
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 config, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => 2,
            LabError::Numerical(e) if !e.is_numerical() => 2,
            LabError::Numerical(_) | LabError::Conservation { .. } | LabError::Analysis { .. } => 3,
            LabError::SweepFailures { .. } => 3,
            LabError::Io { .. } | LabError::Format(_) => 4,
        }
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => LabError::Io {
                path: PathBuf::from("<csv>"),
                source: io,
            },
            other => LabError::Format(format!("csv: {other:?}")),
        }
    }
}
