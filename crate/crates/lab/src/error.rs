use thiserror::Error;

/// Exit status for invalid configs and flags.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for failures while running an experiment.
pub const EXIT_RUNTIME: i32 = 3;
/// Exit status for a report format the payload cannot be written in.
pub const EXIT_FORMAT: i32 = 4;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("runtime error at `{path}`: {source}")]
    Runtime {
        path: String,
        #[source]
        source: sr_core::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config { path: path.into(), message: message.into() }
    }

    pub fn runtime(path: impl Into<String>, source: sr_core::Error) -> Self {
        LabError::Runtime { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => EXIT_CONFIG,
            LabError::Format(_) => EXIT_FORMAT,
            LabError::Runtime { .. } | LabError::Io(_) => EXIT_RUNTIME,
        }
    }
}
