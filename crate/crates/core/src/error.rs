use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RcmError {
    #[error("cap exceeded: {what} needs {needed}, cap is {cap}")]
    Cap {
        what: &'static str,
        needed: usize,
        cap: usize,
    },
    #[error("margin insufficient: {0}")]
    Margin(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid template: {0}")]
    Template(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("mixed exact and approximate scalars")]
    MixedMode,
    #[error("invariant failed: {0}")]
    Invariant(String),
}

impl RcmError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RcmError::Cap { .. } | RcmError::Margin(_) => 2,
            RcmError::Invariant(_) => 3,
            RcmError::Parse(_) | RcmError::Template(_) | RcmError::MixedMode => 4,
            RcmError::Precondition(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, RcmError>;

pub(crate) fn cap_check(what: &'static str, needed: usize, cap: usize) -> Result<()> {
    if needed > cap {
        Err(RcmError::Cap { what, needed, cap })
    } else {
        Ok(())
    }
}
