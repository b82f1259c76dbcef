//! Mirroring versus balancing.
//!
//! For every round after the first, a player's word is compared with two
//! reference points: the opponent's previous word, and the mean of both
//! previous words. A model whose words sit closer to the mean is balancing;
//! one whose words sit closer to the opponent's last word is mirroring.

use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::embedding::{euclidean_distance, mean_embedding, EmbeddingSource};
use crate::game::Seat;
use crate::record::{GameRecord, RecordOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mirroring,
    Balancing,
}

/// Which games feed the strategy measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFilter {
    /// Keep only games that ended in a win.
    pub wins_only: bool,
    /// Drop games lost to an invalid word.
    pub exclude_invalid_word: bool,
}

impl Default for SampleFilter {
    fn default() -> Self {
        SampleFilter {
            wins_only: true,
            exclude_invalid_word: true,
        }
    }
}

impl SampleFilter {
    pub fn accepts(&self, outcome: &RecordOutcome) -> bool {
        match outcome {
            RecordOutcome::Aborted { .. } => false,
            RecordOutcome::LossInvalidWord { .. } if self.exclude_invalid_word => false,
            o => !self.wins_only || o.is_win(),
        }
    }
}

/// Per-(game, seat) means over the measured rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySample {
    pub game_id: String,
    pub seat: Seat,
    pub rounds: usize,
    pub mean_dist_prev: f64,
    pub mean_dist_avg: f64,
}

impl StrategySample {
    pub fn classify(&self) -> Classification {
        classify_means(self.mean_dist_prev, self.mean_dist_avg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub model_id: String,
    pub mean_dist_prev: f64,
    pub mean_dist_avg: f64,
    /// Standard deviation of the per-sample means.
    pub dispersion_prev: f64,
    pub dispersion_avg: f64,
    /// Standard error of the grand means.
    pub sem_prev: f64,
    pub sem_avg: f64,
    /// (game, seat) samples; a self-play game counts twice.
    pub n_samples: usize,
    /// Distinct games contributing at least one sample.
    pub n_games: usize,
    pub label: Strategy,
    /// The two means were exactly equal; the label defaults to mirroring.
    pub tie: bool,
    pub filter: SampleFilter,
    pub samples: Vec<StrategySample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: Strategy,
    pub tie: bool,
}

/// Balancing iff the mean distance to the average embedding is strictly
/// smaller than the mean distance to the opponent's previous word.
pub fn classify_strategy(report: &StrategyReport) -> Classification {
    classify_means(report.mean_dist_prev, report.mean_dist_avg)
}

pub fn classify_means(mean_dist_prev: f64, mean_dist_avg: f64) -> Classification {
    Classification {
        label: if mean_dist_avg < mean_dist_prev {
            Strategy::Balancing
        } else {
            Strategy::Mirroring
        },
        tie: mean_dist_avg == mean_dist_prev,
    }
}

/// Strategy measurement for `model_id` over the games accepted by `filter`.
pub fn strategy_metrics(
    games: &[GameRecord],
    model_id: &str,
    source: &dyn EmbeddingSource,
    filter: SampleFilter,
) -> Result<StrategyReport, AnalysisError> {
    let mut samples = Vec::new();
    let mut n_games = 0;
    for game in games.iter().filter(|g| filter.accepts(&g.outcome)) {
        let mut contributed = false;
        for seat in game.seats_of(model_id) {
            if let Some(sample) = measure(game, seat, source)? {
                samples.push(sample);
                contributed = true;
            }
        }
        if contributed {
            n_games += 1;
        }
    }
    if samples.is_empty() {
        return Err(AnalysisError::NoQualifyingGames);
    }

    let prev: Vec<f64> = samples.iter().map(|s| s.mean_dist_prev).collect();
    let avg: Vec<f64> = samples.iter().map(|s| s.mean_dist_avg).collect();
    let (mean_dist_prev, dispersion_prev) = mean_and_std(&prev);
    let (mean_dist_avg, dispersion_avg) = mean_and_std(&avg);
    let root_n = sqrt(samples.len() as f64);
    let Classification { label, tie } = classify_means(mean_dist_prev, mean_dist_avg);
    Ok(StrategyReport {
        model_id: model_id.into(),
        mean_dist_prev,
        mean_dist_avg,
        dispersion_prev,
        dispersion_avg,
        sem_prev: dispersion_prev / root_n,
        sem_avg: dispersion_avg / root_n,
        n_samples: samples.len(),
        n_games,
        label,
        tie,
        filter,
        samples,
    })
}

fn measure(
    game: &GameRecord,
    seat: Seat,
    source: &dyn EmbeddingSource,
) -> Result<Option<StrategySample>, AnalysisError> {
    let mut sum_prev = 0.0;
    let mut sum_avg = 0.0;
    let mut rounds = 0usize;
    for pair in game.rounds.windows(2) {
        let (before, now) = (&pair[0], &pair[1]);
        let current = source.require(now.word(seat).as_str())?;
        let own_prev = source.require(before.word(seat).as_str())?;
        let opp_prev = source.require(before.word(seat.other()).as_str())?;
        let midpoint = mean_embedding([own_prev, opp_prev])?;
        sum_prev += euclidean_distance(current, opp_prev)?;
        sum_avg += euclidean_distance(current, &midpoint)?;
        rounds += 1;
    }
    if rounds == 0 {
        return Ok(None);
    }
    Ok(Some(StrategySample {
        game_id: game.game_id.clone(),
        seat,
        rounds,
        mean_dist_prev: sum_prev / rounds as f64,
        mean_dist_avg: sum_avg / rounds as f64,
    }))
}

/// Mean and sample standard deviation (n - 1 in the denominator; 0 for a
/// single value).
fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, sqrt(ss / (n - 1.0)))
}
