use alloc::string::String;

/// Errors raised by the reconstruction toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Shapes, indices or parameter values that violate an operation's contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A scan window does not fit inside the object.
    #[error("scan {scan}: {reason}")]
    Geometry { scan: usize, reason: String },

    /// An inconsistent reconstruction setup, e.g. blind mode without an initial probe.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite value appeared while iterating.
    #[error("diverged at iteration {iteration}: {what}")]
    Diverged { iteration: usize, what: String },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! arg_err {
    ($($t:tt)*) => {
        $crate::Error::Argument(alloc::format!($($t)*))
    };
}
pub(crate) use arg_err;
