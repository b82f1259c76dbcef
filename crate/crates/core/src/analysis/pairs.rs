use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::record::{GameRecord, RecordOutcome};

/// Success statistics for one unordered model pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub pair: (String, String),
    pub trials: usize,
    pub wins: usize,
    pub losses_repetition: usize,
    pub losses_invalid_word: usize,
    pub losses_non_convergence: usize,
    /// `wins / trials`.
    pub success_rate: f64,
    /// Mean round count over won games; `None` without wins.
    pub avg_rounds_on_wins: Option<f64>,
    /// Mean round count over every trial.
    pub avg_rounds_all: f64,
}

#[derive(Default)]
struct Tally {
    trials: usize,
    wins: usize,
    repetition: usize,
    invalid: usize,
    non_convergence: usize,
    rounds_on_wins: usize,
    rounds_all: usize,
}

/// Groups games by unordered model pair. Aborted games are not trials and
/// are skipped. Pairs come out sorted.
pub fn pair_stats(games: &[GameRecord]) -> Vec<PairStats> {
    let mut groups: BTreeMap<(String, String), Tally> = BTreeMap::new();
    for game in games {
        if game.outcome.is_aborted() {
            continue;
        }
        let t = groups.entry(game.pair_key()).or_default();
        let rounds = game.rounds.len();
        t.trials += 1;
        t.rounds_all += rounds;
        match game.outcome {
            RecordOutcome::Win { .. } => {
                t.wins += 1;
                t.rounds_on_wins += rounds;
            }
            RecordOutcome::LossRepetition { .. } => t.repetition += 1,
            RecordOutcome::LossInvalidWord { .. } => t.invalid += 1,
            RecordOutcome::LossNonConvergence => t.non_convergence += 1,
            RecordOutcome::Aborted { .. } => unreachable!(),
        }
    }
    groups
        .into_iter()
        .map(|(pair, t)| PairStats {
            pair,
            trials: t.trials,
            wins: t.wins,
            losses_repetition: t.repetition,
            losses_invalid_word: t.invalid,
            losses_non_convergence: t.non_convergence,
            success_rate: t.wins as f64 / t.trials as f64,
            avg_rounds_on_wins: (t.wins > 0).then(|| t.rounds_on_wins as f64 / t.wins as f64),
            avg_rounds_all: t.rounds_all as f64 / t.trials as f64,
        })
        .collect()
}
