//! Post-game analyses over stored games and word embeddings: per-round
//! distance curves, strategy measurement, pair success statistics and PCA
//! trajectories.

mod distances;
mod pairs;
pub mod pca;
mod strategy;
mod trajectory;

use alloc::string::String;
use core::fmt;

use crate::embedding::EmbeddingError;

pub use distances::{aligned_average_distances, round_distances, AlignedPoint};
pub use pairs::{pair_stats, PairStats};
pub use pca::{pca_fit_project, PcaError, PcaFit};
pub use strategy::{
    classify_means, classify_strategy, strategy_metrics, Classification, SampleFilter, Strategy,
    StrategyReport, StrategySample,
};
pub use trajectory::{export_trajectory, TrajectoryExport, TrajectoryPoint};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    EmptyInput,
    InvalidWindow,
    MissingEmbedding(String),
    DimensionMismatch { expected: usize, found: usize },
    NoQualifyingGames,
    Pca(PcaError),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::EmptyInput => f.write_str("no games to analyze"),
            AnalysisError::InvalidWindow => f.write_str("window must be at least 1"),
            AnalysisError::MissingEmbedding(w) => write!(f, "no embedding for word {w:?}"),
            AnalysisError::DimensionMismatch { expected, found } => {
                write!(f, "embedding dimension mismatch: expected {expected}, found {found}")
            }
            AnalysisError::NoQualifyingGames => {
                f.write_str("no qualifying games for this model")
            }
            AnalysisError::Pca(e) => write!(f, "pca: {e}"),
        }
    }
}

impl core::error::Error for AnalysisError {}

impl From<EmbeddingError> for AnalysisError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::UnknownWord(w) => AnalysisError::MissingEmbedding(w),
            EmbeddingError::DimensionMismatch { expected, found } => {
                AnalysisError::DimensionMismatch { expected, found }
            }
            EmbeddingError::EmptyInput | EmbeddingError::NonFinite => AnalysisError::EmptyInput,
        }
    }
}

impl From<PcaError> for AnalysisError {
    fn from(e: PcaError) -> Self {
        AnalysisError::Pca(e)
    }
}
