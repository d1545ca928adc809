use thiserror::Error;

use crate::embeddings::EmbedError;
use crate::ingest::IngestError;
use crate::matcher::MatchError;
use crate::report::{ConfigError, ReportError};
use crate::similarity::SimilarityError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error; every variant carries its module prefix in `Display`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("embeddings: {0}")]
    Embed(#[from] EmbedError),
    #[error("similarity: {0}")]
    Similarity(#[from] SimilarityError),
    #[error("matcher: {0}")]
    Match(MatchError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
}

/// Embedding and similarity failures keep their own module prefix.
impl From<MatchError> for Error {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::Embed(e) => Error::Embed(e),
            MatchError::Similarity(e) => Error::Similarity(e),
            other => Error::Match(other),
        }
    }
}

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;

impl Error {
    /// Process exit code: 1 config, 2 I/O, 3 provider.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => EXIT_CONFIG,
            Error::Ingest(IngestError::MissingNameColumn { .. }) => EXIT_CONFIG,
            Error::Ingest(_) => EXIT_IO,
            Error::Embed(EmbedError::InvalidConfig(_)) => EXIT_CONFIG,
            Error::Embed(_) | Error::Similarity(_) => EXIT_PROVIDER,
            Error::Match(MatchError::Embed(EmbedError::InvalidConfig(_))) => EXIT_CONFIG,
            Error::Match(MatchError::Embed(_) | MatchError::Similarity(_)) => EXIT_PROVIDER,
            Error::Match(_) => EXIT_CONFIG,
            Error::Report(_) => EXIT_IO,
        }
    }
}
