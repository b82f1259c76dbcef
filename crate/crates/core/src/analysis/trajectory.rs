use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::pca::pca_fit_project;
use super::AnalysisError;
use crate::embedding::EmbeddingSource;
use crate::game::Seat;
use crate::record::GameRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub round: u32,
    pub seat: Seat,
    pub word: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// One game's words projected onto their first three principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryExport {
    pub game_id: String,
    /// Ordered by (round, seat).
    pub points: Vec<TrajectoryPoint>,
    /// The game was won; its last point is the matched word.
    pub matched: bool,
    pub explained_variance: (f64, f64, f64),
    /// The words span fewer than three directions; missing coordinates are 0.
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_model_tag: Option<String>,
}

/// Fits a 3-component PCA on every word of the game (both seats, all rounds)
/// and returns the projected, labelled points.
pub fn export_trajectory(
    game: &GameRecord,
    source: &dyn EmbeddingSource,
) -> Result<TrajectoryExport, AnalysisError> {
    if game.rounds.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut labels = Vec::with_capacity(game.rounds.len() * 2);
    let mut vectors = Vec::with_capacity(game.rounds.len() * 2);
    for round in &game.rounds {
        for seat in Seat::BOTH {
            let word = round.word(seat).as_str();
            vectors.push(source.require(word)?.values());
            labels.push((round.index, seat, word));
        }
    }
    let fit = pca_fit_project(&vectors, 3)?;
    let points = labels
        .into_iter()
        .zip(&fit.projected)
        .map(|((round, seat, word), p)| TrajectoryPoint {
            round,
            seat,
            word: word.into(),
            x: p[0],
            y: p[1],
            z: p[2],
        })
        .collect();
    let r = &fit.explained_variance_ratio;
    Ok(TrajectoryExport {
        game_id: game.game_id.clone(),
        points,
        matched: game.outcome.is_win(),
        explained_variance: (r[0], r[1], r[2]),
        degenerate: fit.degenerate,
        embedding_model_tag: game.embedding_model_tag.clone(),
    })
}
