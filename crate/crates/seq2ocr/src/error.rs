use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or state dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input violates a documented precondition (empty image, bad id, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A word references a character the font atlas cannot draw.
    #[error("unknown glyph {0:?}")]
    UnknownGlyph(char),

    /// Label contains a symbol outside the model vocabulary.
    #[error("symbol {0:?} not in vocabulary")]
    UnknownSymbol(char),

    /// Configuration file / --set override problem.
    #[error("config error: {0}")]
    Config(String),

    /// Manifest, image file, or other on-disk data problem.
    #[error("data error: {0}")]
    Data(String),

    /// Checkpoint container is malformed or inconsistent.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 data.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
