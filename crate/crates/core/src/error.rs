use alloc::string::String;

/// Errors raised by the model, the quantum oracle and the harnesses.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("vector or weights not normalized (norm {0})")]
    Normalization(f64),

    #[error("invalid operator: {0}")]
    InvalidOperator(&'static str),

    #[error("property window includes the no-registration outcome and has no projector")]
    NoRepresentation,

    #[error("ensemble must contain at least one object")]
    EmptyEnsemble,

    #[error("no detected objects: conditional statistics undefined")]
    NoDetections,

    #[error("outcome has zero probability in the given state")]
    ImpossibleOutcome,

    #[error("invalid measurement branching: {0}")]
    Branching(String),

    #[error("invalid observable: {0}")]
    Observable(String),

    #[error("model `{model}` does not support setting {setting}")]
    UnsupportedSetting { model: String, setting: String },

    #[error("invalid model definition: {0}")]
    Model(String),
}

pub type Result<T> = core::result::Result<T, Error>;
