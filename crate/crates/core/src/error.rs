use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    /// A linear system that had to be factorized was numerically singular.
    /// `block` names the offending block (or column group) when known.
    #[error("ill-conditioned system{}: {detail}", block.map(|b| format!(" (block {b})")).unwrap_or_default())]
    Conditioning {
        block: Option<usize>,
        detail: String,
    },

    #[error("problem too large: {0}")]
    Scale(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn conditioning(block: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Conditioning {
            block,
            detail: detail.into(),
        }
    }
}
