use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the simulator core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// Caller broke an operation's precondition (dimension mismatch, wrong stage, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// The regularized Wiener system could not be factored.
    #[error("estimator error: regularized correlation matrix is singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },
    /// A pipeline stage found a buffer it needs unpopulated.
    #[error("pipeline state error: {0}")]
    PipelineState(String),
    /// A lookup (expert cost profile, KPM name, feature) failed.
    #[error("lookup error: {0}")]
    Lookup(String),
    /// Correlation entries are undefined because some KPMs have zero variance.
    #[error("clustering error: degenerate KPMs {0:?}")]
    Degenerate(Vec<String>),
    /// Not enough data for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Short machine-readable category used by front ends.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::SingularMatrix { .. } => "singular_matrix",
            Error::PipelineState(_) => "pipeline_state",
            Error::Lookup(_) => "lookup",
            Error::Degenerate(_) => "degenerate",
            Error::InsufficientData(_) => "insufficient_data",
        }
    }
}
