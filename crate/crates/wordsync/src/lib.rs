//! Runtime side of the word synchronization game: chat-model and dictionary
//! clients, embedding files, the JSONL game log, tournaments, the live-play
//! HTTP service and the `wordsync` command line.
//!
//! Rules, agents and analyses live in [`wordsync_core`].

pub mod cli;
pub mod dictionary;
pub mod embeddings;
pub mod llm;
pub mod retry;
pub mod service;
pub mod storage;
pub mod tournament;

pub use wordsync_core;
