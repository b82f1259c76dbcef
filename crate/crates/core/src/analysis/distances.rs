use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::embedding::{euclidean_distance, EmbeddingSource};
use crate::record::GameRecord;

/// Distance between the two seats' words, one entry per round.
pub fn round_distances(
    game: &GameRecord,
    source: &dyn EmbeddingSource,
) -> Result<Vec<f64>, AnalysisError> {
    game.rounds
        .iter()
        .map(|r| {
            let a = source.require(r.word_a.as_str())?;
            let b = source.require(r.word_b.as_str())?;
            Ok(euclidean_distance(a, b)?)
        })
        .collect()
}

/// Mean round distance at a fixed offset from the end of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPoint {
    /// 0 is the final round, 1 the one before, and so on.
    pub offset_from_end: usize,
    pub mean: f64,
    /// Games long enough to have a round at this offset.
    pub count: usize,
}

/// Aligns games on their final round and averages the per-round distances
/// over the last `window` rounds. Offsets no game reaches are left out.
/// Points are ordered from the largest offset down to 0.
pub fn aligned_average_distances(
    games: &[GameRecord],
    source: &dyn EmbeddingSource,
    window: usize,
) -> Result<Vec<AlignedPoint>, AnalysisError> {
    if window == 0 {
        return Err(AnalysisError::InvalidWindow);
    }
    if games.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut sums = vec![0.0; window];
    let mut counts = vec![0usize; window];
    for game in games {
        let d = round_distances(game, source)?;
        for (offset, value) in d.iter().rev().take(window).enumerate() {
            sums[offset] += value;
            counts[offset] += 1;
        }
    }
    Ok((0..window)
        .rev()
        .filter(|&o| counts[o] > 0)
        .map(|o| AlignedPoint {
            offset_from_end: o,
            mean: sums[o] / counts[o] as f64,
            count: counts[o],
        })
        .collect())
}
