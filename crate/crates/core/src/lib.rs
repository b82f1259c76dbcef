//! Core of the word synchronization game: two players say one word per
//! round and win when they say the same word, without ever reusing a word.
//!
//! This crate is `no_std` (it needs `alloc`). It holds everything that does
//! not touch the network or the file system:
//!
//! * [`game`]: the rules engine;
//! * [`word`]: word normalization;
//! * [`players`]: prompt text, reply parsing and the embedding agents;
//! * [`embedding`]: vectors, distance and mean;
//! * [`analysis`]: distance curves, strategy measurement, pair statistics
//!   and PCA trajectories;
//! * [`record`]: the stored form of a finished game.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod embedding;
pub mod game;
pub mod linalg;
pub mod players;
pub mod record;
pub mod word;

pub use embedding::{Embedding, EmbeddingError, EmbeddingSource, EmbeddingTable};
pub use game::{GameConfig, GameError, GameState, Outcome, RoundPair, Seat, ValidationMode};
pub use record::{AgentStrategy, GameRecord, PlayerKind, PlayerSpec, RecordOutcome};
pub use word::{normalize_word, Word, WordError};
