use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
///
/// Parse errors carry the source name (a file path, or a caller-supplied
/// label for in-memory text) and a 1-based line number so that bad input
/// files can be fixed without guesswork.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: malformed line: {reason}")]
    MalformedLine {
        source_name: String,
        line: usize,
        reason: String,
    },

    #[error("{source_name}:{line}: not a number: `{token}`")]
    InvalidNumber {
        source_name: String,
        line: usize,
        token: String,
    },

    #[error("{source_name}:{line}: duplicate id `{id}`")]
    DuplicateId {
        source_name: String,
        line: usize,
        id: String,
    },

    #[error("{source_name}:{line}: expected {expected} values, found {found}")]
    LineDimensionMismatch {
        source_name: String,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{source_name}: no data lines")]
    EmptyInput { source_name: String },

    #[error("{context}: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{context}: empty input sequence")]
    EmptySequence { context: &'static str },

    #[error("{context}: non-finite value")]
    NonFinite { context: &'static str },

    #[error("unknown class id `{class_id}`")]
    UnknownClass { class_id: String },

    #[error("instance `{instance_id}` has no acoustic embedding")]
    MissingInstanceEmbedding { instance_id: String },

    #[error("{context}: zero-norm vector")]
    ZeroNorm { context: &'static str },

    #[error("rank {rank} exceeds min(acoustic_dim, semantic_dim) = {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("cannot split {classes} classes into {folds} folds")]
    InvalidFoldCount { folds: usize, classes: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("training diverged at epoch {epoch}: non-finite objective")]
    Diverged { epoch: usize },

    #[error("seed {seed}: {source}")]
    SeedFailed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("t-test group needs at least 2 samples, got {n}")]
    GroupTooSmall { n: usize },

    #[error("grid search: every configuration failed")]
    AllConfigsFailed,

    #[error("checkpoint {source_name}:{line}: {reason}")]
    CheckpointFormat {
        source_name: String,
        line: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
