use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("tanimoto similarity undefined for two all-zero vectors")]
    UndefinedTanimoto,

    #[error("precomputed kernel cannot be evaluated pointwise")]
    PrecomputedKernel,

    #[error("factorization failed after jitter retry (condition estimate {condition:e})")]
    Factorization { condition: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
