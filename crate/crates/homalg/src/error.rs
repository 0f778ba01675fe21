use thiserror::Error;

use crate::kaplansky::FiltrationChain;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("ring mismatch: {0}")]
    RingMismatch(String),
    #[error("unsupported ring: {0}")]
    UnsupportedRing(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("budget exceeded: {context}")]
    BudgetExceeded {
        context: String,
        partial: Option<Box<FiltrationChain>>,
    },
    #[error("certificate missing: {0}")]
    CertificateMissing(String),
    #[error("not in class: {0}")]
    NotInClass(String),
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn budget(context: impl Into<String>) -> Error {
        Error::BudgetExceeded {
            context: context.into(),
            partial: None,
        }
    }
}
