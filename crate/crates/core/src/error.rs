use std::path::PathBuf;

use hetlink_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{}:{line}: node {node} out of range for {num_nodes} feature rows", path.display())]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        node: usize,
        num_nodes: usize,
    },
    #[error("expected {expected} labels (one per node), found {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("graph has no node labels")]
    MissingLabels,
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("non-edge pool exhausted: {needed} negatives requested, {available} non-edges exist")]
    NonEdgePoolExhausted { needed: usize, available: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),
    #[error("unknown variant {0:?} (expected full, no-alpha, no-selection or vanilla-recon)")]
    UnknownVariant(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("score list is empty")]
    EmptyScores,
    #[error("non-finite score {0}")]
    NonFiniteScore(f64),
    #[error("correlation needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("split file: {0}")]
    SplitFormat(String),
    #[error("checkpoint does not match model: {0}")]
    CheckpointMismatch(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable error class.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::SplitFormat(_) => "parse",
            Error::DimensionMismatch { .. } | Error::LabelCount { .. } => "dimension",
            Error::MissingLabels => "labels",
            Error::InvalidRatios(_) | Error::InvalidHyperparams(_) | Error::UnknownVariant(_) => {
                "config"
            }
            Error::NonEdgePoolExhausted { .. } => "sampling",
            Error::Diverged { .. } => "divergence",
            Error::EmptyScores | Error::NonFiniteScore(_) | Error::TooFewRows(_) => "metric",
            Error::CheckpointMismatch(_) => "checkpoint",
            Error::Autodiff(AutodiffError::Checkpoint(_)) => "checkpoint",
            Error::Autodiff(_) => "numeric",
            Error::Csv(_) | Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
