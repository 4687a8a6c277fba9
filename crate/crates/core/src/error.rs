use alloc::string::String;

/// Errors reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// A sampler or solver produced a non-finite state.
    #[error("diverged at level {level}, step {step}: non-finite state")]
    Diverged { level: usize, step: usize },

    #[error("step size {step} exceeds the stability bound {bound}")]
    UnstableStep { step: f64, bound: f64 },

    #[error("singular linear system")]
    Singular,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("reference signal has zero energy")]
    ZeroReference,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
