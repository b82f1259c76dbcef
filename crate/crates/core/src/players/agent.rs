//! Scripted players that pick words from a fixed embedding vocabulary.
//!
//! * `mirror` plays the unused word nearest to the opponent's last word;
//! * `balance` plays the unused word nearest to the mean of both last words;
//! * `random` plays a seeded pseudo-random unused word every round.
//!
//! Every strategy opens with a seeded pseudo-random word. Nearest-neighbour
//! ties go to the lexicographically smallest word. Given the same seed,
//! vocabulary and history an agent always makes the same choice.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{mean_embedding, squared_distance, Embedding, EmbeddingSource, EmbeddingTable};
use crate::game::{GameState, Seat};
use crate::record::AgentStrategy;
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentError {
    VocabularyExhausted,
    MissingEmbedding(String),
    InvalidVocabularyWord(String),
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::VocabularyExhausted => f.write_str("every vocabulary word has been used"),
            AgentError::MissingEmbedding(w) => write!(f, "no embedding for word {w:?}"),
            AgentError::InvalidVocabularyWord(w) => {
                write!(f, "vocabulary entry {w:?} is not a single normalized word")
            }
        }
    }
}

impl core::error::Error for AgentError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentPolicy {
    pub strategy: AgentStrategy,
    pub seed: u64,
}

impl AgentPolicy {
    pub fn new(strategy: AgentStrategy, seed: u64) -> AgentPolicy {
        AgentPolicy { strategy, seed }
    }

    /// Next word for `seat`. Embeddings of the previous round's words are
    /// looked up in `vocabulary` first and then in `fallback`.
    pub fn next_word(
        &self,
        state: &GameState,
        seat: Seat,
        vocabulary: &EmbeddingTable,
        fallback: Option<&dyn EmbeddingSource>,
    ) -> Result<Word, AgentError> {
        let candidates: Vec<(&str, &Embedding)> = vocabulary
            .iter()
            .filter(|(w, _)| !state.is_used(w))
            .collect();
        if candidates.is_empty() {
            return Err(AgentError::VocabularyExhausted);
        }

        let last = match state.last_round() {
            Some(last) if self.strategy != AgentStrategy::Random => last,
            _ => {
                let pick = self.random_pick(state.next_round_index(), candidates.len());
                return to_word(candidates[pick].0);
            }
        };

        let lookup = |w: &Word| -> Result<&Embedding, AgentError> {
            vocabulary
                .embedding(w.as_str())
                .or_else(|| fallback.and_then(|f| f.embedding(w.as_str())))
                .ok_or_else(|| AgentError::MissingEmbedding(w.as_str().to_string()))
        };
        let opponent = lookup(last.word(seat.other()))?;
        let target = match self.strategy {
            AgentStrategy::Mirror => opponent.clone(),
            AgentStrategy::Balance => {
                let own = lookup(last.word(seat))?;
                mean_embedding([own, opponent]).map_err(|_| {
                    AgentError::MissingEmbedding(last.word(seat).as_str().to_string())
                })?
            }
            AgentStrategy::Random => unreachable!("handled above"),
        };

        let mut best: Option<(&str, f64)> = None;
        for (w, v) in candidates {
            if v.dim() != target.dim() {
                return Err(AgentError::MissingEmbedding(w.to_string()));
            }
            let d = squared_distance(v.values(), target.values());
            // candidates come in lexicographic order, so strict < keeps the
            // smallest word on ties
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((w, d));
            }
        }
        to_word(best.expect("candidates is non-empty").0)
    }

    fn random_pick(&self, round: u32, len: usize) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(round));
        rng.random_range(0..len)
    }
}

fn to_word(text: &str) -> Result<Word, AgentError> {
    let w = Word::from_normalized(text)
        .map_err(|_| AgentError::InvalidVocabularyWord(text.to_string()))?;
    if w.as_str() != text {
        return Err(AgentError::InvalidVocabularyWord(text.to_string()));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameConfig, Outcome};

    fn table(entries: &[(&str, &[f64])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new("test", entries[0].1.len());
        for (w, v) in entries {
            t.insert(w, Embedding::new(v.to_vec()).unwrap()).unwrap();
        }
        t
    }

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    /// Exhaustive nearest unused neighbour, written independently of the
    /// agent's loop.
    fn brute_nearest(vocab: &[(&str, &[f64])], used: &[&str], target: &[f64]) -> String {
        let mut scored: Vec<(f64, &str)> = vocab
            .iter()
            .filter(|(w, _)| !used.contains(w))
            .map(|(w, v)| {
                let d: f64 = v.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
                (d.sqrt(), *w)
            })
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
        scored[0].1.to_string()
    }

    #[test]
    fn mirror_picks_nearest_to_opponent() {
        let entries: &[(&str, &[f64])] = &[
            ("x", &[0.0, 0.0]),
            ("y", &[1.0, 0.0]),
            ("z", &[5.0, 5.0]),
            ("p", &[9.0, 9.0]),
            ("q", &[1.1, 0.0]),
        ];
        let vocab = table(entries);
        // seat A played p, seat B played q at (1.1, 0); A mirrors B
        let mut state = GameState::new(GameConfig::default()).unwrap();
        state.submit_round(w("p"), w("q"), true, true).unwrap();
        let got = AgentPolicy::new(AgentStrategy::Mirror, 1)
            .next_word(&state, Seat::A, &vocab, None)
            .unwrap();
        assert_eq!(got.as_str(), "y");
        assert_eq!(brute_nearest(entries, &["p", "q"], &[1.1, 0.0]), "y");
    }

    #[test]
    fn balance_picks_nearest_to_midpoint() {
        let entries: &[(&str, &[f64])] = &[
            ("a", &[0.0, 0.0]),
            ("b", &[2.0, 0.0]),
            ("w", &[1.0, 0.0]),
            ("far", &[1.0, 3.0]),
            ("near", &[2.5, 0.0]),
        ];
        let vocab = table(entries);
        let mut state = GameState::new(GameConfig::default()).unwrap();
        state.submit_round(w("a"), w("b"), true, true).unwrap();
        for seat in Seat::BOTH {
            let got = AgentPolicy::new(AgentStrategy::Balance, 3)
                .next_word(&state, seat, &vocab, None)
                .unwrap();
            assert_eq!(got.as_str(), "w");
        }
        assert_eq!(brute_nearest(entries, &["a", "b"], &[1.0, 0.0]), "w");
    }

    #[test]
    fn ties_go_to_smallest_word() {
        let vocab = table(&[
            ("m", &[0.0]),
            ("left", &[-1.0]),
            ("right", &[1.0]),
            ("n", &[10.0]),
        ]);
        let mut state = GameState::new(GameConfig::default()).unwrap();
        state.submit_round(w("n"), w("m"), true, true).unwrap();
        let got = AgentPolicy::new(AgentStrategy::Mirror, 0)
            .next_word(&state, Seat::A, &vocab, None)
            .unwrap();
        assert_eq!(got.as_str(), "left");
    }

    #[test]
    fn exhausted_vocabulary() {
        let vocab = table(&[("a", &[0.0]), ("b", &[1.0])]);
        let mut state = GameState::new(GameConfig::default()).unwrap();
        state.submit_round(w("a"), w("b"), true, true).unwrap();
        for strategy in [AgentStrategy::Mirror, AgentStrategy::Balance, AgentStrategy::Random] {
            assert_eq!(
                AgentPolicy::new(strategy, 0).next_word(&state, Seat::A, &vocab, None),
                Err(AgentError::VocabularyExhausted)
            );
        }
    }

    #[test]
    fn missing_target_embedding_uses_fallback() {
        let vocab = table(&[("a", &[0.0]), ("b", &[1.0]), ("c", &[5.0])]);
        let extra = table(&[("zebra", &[4.0])]);
        let mut state = GameState::new(GameConfig::default()).unwrap();
        state.submit_round(w("a"), w("zebra"), true, true).unwrap();
        let agent = AgentPolicy::new(AgentStrategy::Mirror, 0);
        assert_eq!(
            agent.next_word(&state, Seat::A, &vocab, None),
            Err(AgentError::MissingEmbedding("zebra".into()))
        );
        let got = agent
            .next_word(&state, Seat::A, &vocab, Some(&extra))
            .unwrap();
        assert_eq!(got.as_str(), "c");
    }

    #[test]
    fn opening_word_depends_only_on_seed() {
        let vocab = EmbeddingTable::synthetic(50, 2, 5);
        let state = GameState::new(GameConfig::default()).unwrap();
        let pick = |seed| {
            AgentPolicy::new(AgentStrategy::Balance, seed)
                .next_word(&state, Seat::A, &vocab, None)
                .unwrap()
        };
        assert_eq!(pick(9), pick(9));
        let distinct: alloc::collections::BTreeSet<String> =
            (0..20).map(|s| pick(s).as_str().to_string()).collect();
        assert!(distinct.len() > 5);
    }

    #[test]
    fn balance_self_play_never_repeats_or_goes_invalid() {
        for seed in 0..30u64 {
            let vocab = EmbeddingTable::synthetic(3 + (seed as usize % 7), 2, seed);
            let a = AgentPolicy::new(AgentStrategy::Balance, seed * 2);
            let b = AgentPolicy::new(AgentStrategy::Balance, seed * 2 + 1);
            let mut state = GameState::new(GameConfig::default()).unwrap();
            let end = loop {
                let wa = a.next_word(&state, Seat::A, &vocab, None);
                let wb = b.next_word(&state, Seat::B, &vocab, None);
                match (wa, wb) {
                    (Ok(wa), Ok(wb)) => {
                        if let Some(o) = state.submit_round(wa, wb, true, true).unwrap() {
                            break Ok(o);
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => break Err(e),
                }
            };
            match end {
                Ok(Outcome::Win { .. }) | Err(AgentError::VocabularyExhausted) => {}
                other => panic!("seed {seed}: unexpected end {other:?}"),
            }
        }
    }
}
