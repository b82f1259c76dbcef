//! Player descriptions and the persisted record of one finished game.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::game::{GameConfig, GameState, Outcome, RoundPair, Seat};
use crate::word::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayerKind {
    Llm,
    Agent,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentStrategy {
    Mirror,
    Balance,
    Random,
}

impl AgentStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentStrategy::Mirror => "mirror",
            AgentStrategy::Balance => "balance",
            AgentStrategy::Random => "random",
        }
    }
}

impl FromStr for AgentStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mirror" => Ok(AgentStrategy::Mirror),
            "balance" => Ok(AgentStrategy::Balance),
            "random" => Ok(AgentStrategy::Random),
            other => Err(format!(
                "unknown agent strategy {other:?} (expected mirror, balance or random)"
            )),
        }
    }
}

/// Who sits in a seat.
///
/// `model_id` doubles as the identity used by the analyses: the chat model
/// name for LLM players, `agent:<strategy>` for agents and `human` for people.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSpec {
    pub kind: PlayerKind,
    pub model_id: String,
    #[serde(default)]
    pub strategy: Option<AgentStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PlayerSpec {
    pub fn llm(model_id: &str) -> PlayerSpec {
        PlayerSpec {
            kind: PlayerKind::Llm,
            model_id: model_id.to_string(),
            strategy: None,
            vocabulary_ref: None,
            seed: None,
        }
    }

    pub fn agent(strategy: AgentStrategy, vocabulary_ref: &str, seed: u64) -> PlayerSpec {
        PlayerSpec {
            kind: PlayerKind::Agent,
            model_id: format!("agent:{}", strategy.as_str()),
            strategy: Some(strategy),
            vocabulary_ref: Some(vocabulary_ref.to_string()),
            seed: Some(seed),
        }
    }

    pub fn human() -> PlayerSpec {
        PlayerSpec {
            kind: PlayerKind::Human,
            model_id: "human".to_string(),
            strategy: None,
            vocabulary_ref: None,
            seed: None,
        }
    }

    /// Parses the `kind:detail` syntax, e.g. `llm:gpt-4o-mini`,
    /// `agent:balance` or `human`. Agent specs still need a vocabulary
    /// before they pass [`PlayerSpec::validate`].
    pub fn parse(text: &str) -> Result<PlayerSpec, String> {
        let (kind, detail) = match text.split_once(':') {
            Some((k, d)) => (k.trim(), d.trim()),
            None => (text.trim(), ""),
        };
        match kind {
            "llm" => {
                if detail.is_empty() {
                    return Err("llm player needs a model id, e.g. llm:gpt-4o-mini".to_string());
                }
                Ok(PlayerSpec::llm(detail))
            }
            "agent" => {
                let strategy: AgentStrategy = detail.parse()?;
                Ok(PlayerSpec {
                    kind: PlayerKind::Agent,
                    model_id: format!("agent:{}", strategy.as_str()),
                    strategy: Some(strategy),
                    vocabulary_ref: None,
                    seed: None,
                })
            }
            "human" => {
                let mut spec = PlayerSpec::human();
                if !detail.is_empty() {
                    spec.model_id = format!("human:{detail}");
                }
                Ok(spec)
            }
            other => Err(format!(
                "unknown player kind {other:?} (expected llm, agent or human)"
            )),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            PlayerKind::Llm if self.model_id.trim().is_empty() => {
                Err("llm player requires a model id".to_string())
            }
            PlayerKind::Agent if self.strategy.is_none() => {
                Err("agent player requires a strategy".to_string())
            }
            PlayerKind::Agent if self.vocabulary_ref.is_none() => {
                Err("agent player requires a vocabulary".to_string())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PlayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PlayerKind::Llm => write!(f, "llm:{}", self.model_id),
            _ => f.write_str(&self.model_id),
        }
    }
}

/// Terminal state of a stored game. `Aborted` covers infrastructure
/// failures and expired live sessions; it is never produced by the rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RecordOutcome {
    Win { round: u32 },
    LossRepetition { round: u32, seat: Seat },
    LossInvalidWord { round: u32, seat: Seat },
    LossNonConvergence,
    Aborted { reason: String },
}

impl RecordOutcome {
    pub fn as_outcome(&self) -> Option<Outcome> {
        match *self {
            RecordOutcome::Win { round } => Some(Outcome::Win { round }),
            RecordOutcome::LossRepetition { round, seat } => {
                Some(Outcome::LossRepetition { round, seat })
            }
            RecordOutcome::LossInvalidWord { round, seat } => {
                Some(Outcome::LossInvalidWord { round, seat })
            }
            RecordOutcome::LossNonConvergence => Some(Outcome::LossNonConvergence),
            RecordOutcome::Aborted { .. } => None,
        }
    }

    pub fn is_win(&self) -> bool {
        matches!(self, RecordOutcome::Win { .. })
    }

    pub fn is_aborted(&self) -> bool {
        matches!(self, RecordOutcome::Aborted { .. })
    }
}

impl From<Outcome> for RecordOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Win { round } => RecordOutcome::Win { round },
            Outcome::LossRepetition { round, seat } => RecordOutcome::LossRepetition { round, seat },
            Outcome::LossInvalidWord { round, seat } => {
                RecordOutcome::LossInvalidWord { round, seat }
            }
            Outcome::LossNonConvergence => RecordOutcome::LossNonConvergence,
        }
    }
}

/// Full history of one game as written to the game log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub player_a: PlayerSpec,
    pub player_b: PlayerSpec,
    pub config: GameConfig,
    #[serde(with = "rounds_as_pairs")]
    pub rounds: Vec<RoundPair>,
    pub outcome: RecordOutcome,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub prompt_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_model_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordError {
    InvalidPlayer(String),
    InvalidConfig(&'static str),
    BadRoundIndex { position: usize, index: u32 },
    /// Replaying the rounds through the rules engine disagrees with the
    /// stored outcome.
    OutcomeMismatch {
        stored: RecordOutcome,
        replayed: Option<Outcome>,
    },
    PlayAfterOutcome { round: u32 },
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordError::InvalidPlayer(why) => write!(f, "invalid player: {why}"),
            RecordError::InvalidConfig(why) => write!(f, "invalid config: {why}"),
            RecordError::BadRoundIndex { position, index } => {
                write!(f, "round at position {position} has index {index}")
            }
            RecordError::OutcomeMismatch { stored, replayed } => write!(
                f,
                "stored outcome {stored:?} does not match replayed outcome {replayed:?}"
            ),
            RecordError::PlayAfterOutcome { round } => {
                write!(f, "round {round} played after the game ended")
            }
        }
    }
}

impl core::error::Error for RecordError {}

impl GameRecord {
    /// Seat occupants in seat order.
    pub fn player(&self, seat: Seat) -> &PlayerSpec {
        match seat {
            Seat::A => &self.player_a,
            Seat::B => &self.player_b,
        }
    }

    pub fn is_self_play(&self) -> bool {
        self.player_a.model_id == self.player_b.model_id
    }

    /// Seats occupied by the given model id.
    pub fn seats_of(&self, model_id: &str) -> Vec<Seat> {
        Seat::BOTH
            .into_iter()
            .filter(|&s| self.player(s).model_id == model_id)
            .collect()
    }

    /// Unordered pair of model ids, smaller first.
    pub fn pair_key(&self) -> (String, String) {
        let a = self.player_a.model_id.clone();
        let b = self.player_b.model_id.clone();
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Checks the player specs and replays the rounds through the rules
    /// engine, which must reproduce the stored outcome.
    pub fn validate(&self) -> Result<(), RecordError> {
        self.player_a.validate().map_err(RecordError::InvalidPlayer)?;
        self.player_b.validate().map_err(RecordError::InvalidPlayer)?;
        let mut state = GameState::new(self.config.clone()).map_err(|e| match e {
            crate::game::GameError::InvalidConfig(why) => RecordError::InvalidConfig(why),
            crate::game::GameError::GameFinished => RecordError::InvalidConfig("finished"),
        })?;
        let invalid = match self.outcome {
            RecordOutcome::LossInvalidWord { round, seat } => Some((round, seat)),
            _ => None,
        };
        for (pos, pair) in self.rounds.iter().enumerate() {
            if pair.index as usize != pos + 1 {
                return Err(RecordError::BadRoundIndex {
                    position: pos,
                    index: pair.index,
                });
            }
            let valid = |seat| invalid != Some((pair.index, seat));
            state
                .submit_round(
                    pair.word_a.clone(),
                    pair.word_b.clone(),
                    valid(Seat::A),
                    valid(Seat::B),
                )
                .map_err(|_| RecordError::PlayAfterOutcome { round: pair.index })?;
        }
        let replayed = state.outcome().copied();
        if replayed != self.outcome.as_outcome() {
            return Err(RecordError::OutcomeMismatch {
                stored: self.outcome.clone(),
                replayed,
            });
        }
        Ok(())
    }
}

mod rounds_as_pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rounds: &[RoundPair], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(rounds.iter().map(|r| (&r.word_a, &r.word_b)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<RoundPair>, D::Error> {
        let pairs: Vec<(Word, Word)> = Vec::deserialize(d)?;
        Ok(pairs
            .into_iter()
            .enumerate()
            .map(|(i, (word_a, word_b))| RoundPair {
                index: i as u32 + 1,
                word_a,
                word_b,
            })
            .collect())
    }
}
