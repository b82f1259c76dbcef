//! Rules engine: simultaneous word production, repetition ban, validity
//! hook, win detection and the round limit.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::word::Word;

pub const DEFAULT_MAX_ROUNDS: u32 = 20;
pub const DEFAULT_TEMPERATURE: f64 = 1.2;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seat {
    A,
    B,
}

impl Seat {
    pub fn other(self) -> Seat {
        match self {
            Seat::A => Seat::B,
            Seat::B => Seat::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Seat::A => 0,
            Seat::B => 1,
        }
    }

    pub const BOTH: [Seat; 2] = [Seat::A, Seat::B];
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seat::A => "a",
            Seat::B => "b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    #[default]
    Remote,
    Local,
    Off,
}

impl fmt::Display for ValidationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationMode::Remote => "remote",
            ValidationMode::Local => "local",
            ValidationMode::Off => "off",
        })
    }
}

impl core::str::FromStr for ValidationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(ValidationMode::Remote),
            "local" => Ok(ValidationMode::Local),
            "off" => Ok(ValidationMode::Off),
            other => Err(alloc::format!(
                "unknown validation mode {other:?} (expected remote, local or off)"
            )),
        }
    }
}

/// Protocol constants for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub max_rounds: u32,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub validation_mode: ValidationMode,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            max_rounds: DEFAULT_MAX_ROUNDS,
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            validation_mode: ValidationMode::Remote,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.max_rounds < 1 {
            return Err(GameError::InvalidConfig("max_rounds must be at least 1"));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GameError::InvalidConfig(
                "temperature must be a finite non-negative number",
            ));
        }
        if self.max_output_tokens < 1 {
            return Err(GameError::InvalidConfig(
                "max_output_tokens must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPair {
    /// 1-based round number.
    pub index: u32,
    pub word_a: Word,
    pub word_b: Word,
}

impl RoundPair {
    pub fn word(&self, seat: Seat) -> &Word {
        match seat {
            Seat::A => &self.word_a,
            Seat::B => &self.word_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    Win { round: u32 },
    LossRepetition { round: u32, seat: Seat },
    LossInvalidWord { round: u32, seat: Seat },
    LossNonConvergence,
}

impl Outcome {
    pub fn is_win(&self) -> bool {
        matches!(self, Outcome::Win { .. })
    }

    pub fn offending_seat(&self) -> Option<Seat> {
        match *self {
            Outcome::LossRepetition { seat, .. } | Outcome::LossInvalidWord { seat, .. } => {
                Some(seat)
            }
            _ => None,
        }
    }

    /// The same outcome with seats A and B exchanged.
    pub fn swap_seats(self) -> Outcome {
        match self {
            Outcome::LossRepetition { round, seat } => Outcome::LossRepetition {
                round,
                seat: seat.other(),
            },
            Outcome::LossInvalidWord { round, seat } => Outcome::LossInvalidWord {
                round,
                seat: seat.other(),
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameError {
    InvalidConfig(&'static str),
    GameFinished,
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::InvalidConfig(why) => write!(f, "invalid game config: {why}"),
            GameError::GameFinished => f.write_str("game is already finished"),
        }
    }
}

impl core::error::Error for GameError {}

/// State of one game. Cloning gives an independent snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    config: GameConfig,
    rounds: Vec<RoundPair>,
    used_words: BTreeSet<String>,
    outcome: Option<Outcome>,
}

impl GameState {
    pub fn new(config: GameConfig) -> Result<GameState, GameError> {
        config.validate()?;
        Ok(GameState {
            config,
            rounds: Vec::new(),
            used_words: BTreeSet::new(),
            outcome: None,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn rounds(&self) -> &[RoundPair] {
        &self.rounds
    }

    pub fn last_round(&self) -> Option<&RoundPair> {
        self.rounds.last()
    }

    /// Number of the round that would be played next.
    pub fn next_round_index(&self) -> u32 {
        self.rounds.len() as u32 + 1
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    /// Normalized words from every completed round, both seats.
    pub fn used_words(&self) -> &BTreeSet<String> {
        &self.used_words
    }

    pub fn is_used(&self, word: &str) -> bool {
        self.used_words.contains(word)
    }

    /// Resolves one round. Precedence: invalid word, then repetition of any
    /// word from an earlier round, then match, then the round limit. Seat A
    /// is checked before seat B.
    pub fn submit_round(
        &mut self,
        word_a: Word,
        word_b: Word,
        valid_a: bool,
        valid_b: bool,
    ) -> Result<Option<Outcome>, GameError> {
        if self.outcome.is_some() {
            return Err(GameError::GameFinished);
        }
        let round = self.next_round_index();

        let outcome = if !valid_a {
            Some(Outcome::LossInvalidWord { round, seat: Seat::A })
        } else if !valid_b {
            Some(Outcome::LossInvalidWord { round, seat: Seat::B })
        } else if self.is_used(word_a.as_str()) {
            Some(Outcome::LossRepetition { round, seat: Seat::A })
        } else if self.is_used(word_b.as_str()) {
            Some(Outcome::LossRepetition { round, seat: Seat::B })
        } else if word_a == word_b {
            Some(Outcome::Win { round })
        } else if round >= self.config.max_rounds {
            Some(Outcome::LossNonConvergence)
        } else {
            None
        };

        self.used_words.insert(word_a.as_str().into());
        self.used_words.insert(word_b.as_str().into());
        self.rounds.push(RoundPair {
            index: round,
            word_a,
            word_b,
        });
        self.outcome = outcome;
        Ok(outcome)
    }
}
