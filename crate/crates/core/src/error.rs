use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite {what} for parameter {index}")]
    Numeric { index: usize, what: &'static str },
    #[error("diverged: parameter norm {norm:e} exceeds guard {guard:e}")]
    Divergence { norm: f64, guard: f64 },
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("too few events: need {required}, got {count}")]
    Statistics { count: usize, required: usize },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

/// Shorthand for an argument check.
macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Argument(alloc::format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
