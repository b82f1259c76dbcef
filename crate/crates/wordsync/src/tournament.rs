//! Batches of independent games between two player specs.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, TimeDelta, Utc};
use futures::StreamExt;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordsync_core::analysis::pair_stats;
use wordsync_core::players::{AgentError, AgentPolicy, PROMPT_VERSION};
use wordsync_core::record::RecordOutcome;
use wordsync_core::{
    AgentStrategy, EmbeddingTable, GameConfig, GameRecord, GameState, PlayerKind, PlayerSpec,
    Seat, ValidationMode, Word,
};

use crate::dictionary::{Dictionary, DictionaryError};
use crate::llm::{ChatClient, LlmError, MissingCredential};
use crate::retry::TransportError;
use crate::storage::{append_game, StorageError};

/// Stand-in word recorded when a reply could not be read as a word.
pub const UNPARSEABLE_PLACEHOLDER: &str = "<unparseable>";

#[derive(Debug, thiserror::Error)]
pub enum TournamentError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Credential(#[from] MissingCredential),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// Failures that stop a single game without a rules outcome.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("chat request failed: {0}")]
    Chat(#[from] TransportError),
    #[error("agent failed: {0}")]
    Agent(AgentError),
    #[error("word validation failed: {0}")]
    Dictionary(#[from] DictionaryError),
    #[error("reply {0:?} is not a word and validation is off")]
    UnparseableUnchecked(String),
}

/// Timestamps written into records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    Wall,
    /// Derived from the game index, so seeded runs produce identical logs.
    Logical,
}

/// Everything a game needs besides the player specs.
pub struct Harness {
    pub dictionary: Arc<Dictionary>,
    pub vocabulary: Option<Arc<EmbeddingTable>>,
    pub vocabulary_ref: Option<String>,
    pub chat: Option<ChatClient>,
    pub clock: Clock,
}

#[derive(Debug, Clone)]
pub struct TournamentSpec {
    pub player_a: PlayerSpec,
    pub player_b: PlayerSpec,
    pub games: usize,
    pub seed: u64,
    pub parallel: usize,
    pub config: GameConfig,
}

/// Per-game identity and agent seeds, fixed before any game starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GamePlan {
    pub index: usize,
    pub game_id: String,
    pub seed_a: u64,
    pub seed_b: u64,
}

pub fn plan_games(spec: &TournamentSpec, clock: Clock) -> Vec<GamePlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let run = match clock {
        Clock::Logical => format!(
            "{}-vs-{}-s{}",
            spec.player_a.model_id, spec.player_b.model_id, spec.seed
        ),
        Clock::Wall => uuid::Uuid::new_v4().simple().to_string(),
    };
    (0..spec.games)
        .map(|index| GamePlan {
            index,
            game_id: format!("{run}-{index:04}"),
            seed_a: rng.next_u64(),
            seed_b: rng.next_u64(),
        })
        .collect()
}

enum Move {
    Word(Word),
    Unparseable(String),
}

enum SeatPlayer<'a> {
    Agent {
        policy: AgentPolicy,
        vocabulary: &'a EmbeddingTable,
    },
    Llm {
        model: &'a str,
        client: &'a ChatClient,
    },
}

impl SeatPlayer<'_> {
    async fn next_move(&self, state: &GameState, seat: Seat) -> Result<Move, HarnessError> {
        match self {
            SeatPlayer::Agent { policy, vocabulary } => {
                agent_word(*policy, state, seat, vocabulary)
                    .map(Move::Word)
                    .map_err(HarnessError::Agent)
            }
            SeatPlayer::Llm { model, client } => match client.next_word(model, state, seat).await {
                Ok(w) => Ok(Move::Word(w)),
                Err(LlmError::Unparseable(raw)) => Ok(Move::Unparseable(raw)),
                Err(LlmError::Transport(e)) => Err(e.into()),
            },
        }
    }
}

/// Agent move. When the opponent's last word is outside the vocabulary
/// there is nothing to aim at, and the agent falls back to a seeded random
/// pick.
pub fn agent_word(
    policy: AgentPolicy,
    state: &GameState,
    seat: Seat,
    vocabulary: &EmbeddingTable,
) -> Result<Word, AgentError> {
    match policy.next_word(state, seat, vocabulary, None) {
        Err(AgentError::MissingEmbedding(word)) => {
            tracing::debug!(%word, "no embedding for target word; picking at random");
            AgentPolicy::new(AgentStrategy::Random, policy.seed).next_word(state, seat, vocabulary, None)
        }
        other => other,
    }
}

impl Harness {
    /// Offline harness: agents over `vocabulary`, no validation, logical
    /// clock.
    pub fn offline(vocabulary: EmbeddingTable, vocabulary_ref: &str) -> Harness {
        Harness {
            dictionary: Arc::new(Dictionary::Off),
            vocabulary: Some(Arc::new(vocabulary)),
            vocabulary_ref: Some(vocabulary_ref.to_string()),
            chat: None,
            clock: Clock::Logical,
        }
    }

    fn check_player(&self, spec: &PlayerSpec) -> Result<(), TournamentError> {
        match spec.kind {
            PlayerKind::Human => Err(TournamentError::Config(
                "human players join through the web service, not `run`".into(),
            )),
            PlayerKind::Llm if self.chat.is_none() => {
                Err(MissingCredential(crate::llm::API_KEY_ENV).into())
            }
            PlayerKind::Agent if self.vocabulary.is_none() => Err(TournamentError::Config(
                format!("{} needs a vocabulary file (--vocab)", spec.model_id),
            )),
            _ => Ok(()),
        }
    }

    fn seat_spec(&self, spec: &PlayerSpec, seed: u64) -> PlayerSpec {
        match (spec.kind, spec.strategy) {
            (PlayerKind::Agent, Some(strategy)) => PlayerSpec::agent(
                strategy,
                self.vocabulary_ref.as_deref().unwrap_or("vocabulary"),
                seed,
            ),
            _ => spec.clone(),
        }
    }

    fn seat_player<'a>(&'a self, spec: &'a PlayerSpec) -> SeatPlayer<'a> {
        match spec.kind {
            PlayerKind::Agent => SeatPlayer::Agent {
                policy: AgentPolicy::new(
                    spec.strategy.expect("checked"),
                    spec.seed.expect("seat specs carry a seed"),
                ),
                vocabulary: self.vocabulary.as_deref().expect("checked"),
            },
            _ => SeatPlayer::Llm {
                model: &spec.model_id,
                client: self.chat.as_ref().expect("checked"),
            },
        }
    }

    fn timestamps(&self, plan: &GamePlan, rounds: usize) -> (DateTime<Utc>, DateTime<Utc>) {
        match self.clock {
            Clock::Wall => (Utc::now(), Utc::now()),
            Clock::Logical => {
                let start = DateTime::UNIX_EPOCH + TimeDelta::minutes(plan.index as i64);
                (start, start + TimeDelta::seconds(rounds as i64))
            }
        }
    }

    /// Plays one game to its outcome. Infrastructure failures give an
    /// aborted record instead of an error.
    pub async fn play_game(&self, spec: &TournamentSpec, plan: &GamePlan) -> GameRecord {
        let started = Utc::now();
        let player_a = self.seat_spec(&spec.player_a, plan.seed_a);
        let player_b = self.seat_spec(&spec.player_b, plan.seed_b);
        let mut state = GameState::new(spec.config.clone()).expect("config validated by caller");
        let result = self.drive(&mut state, &player_a, &player_b).await;
        let outcome = match result {
            Ok(()) => RecordOutcome::from(*state.outcome().expect("drive runs to the end")),
            Err(e) => {
                tracing::warn!(game = %plan.game_id, error = %e, "game aborted");
                RecordOutcome::Aborted {
                    reason: e.to_string(),
                }
            }
        };
        let (started_at, finished_at) = match self.clock {
            Clock::Wall => (started, Utc::now()),
            Clock::Logical => self.timestamps(plan, state.rounds().len()),
        };
        let uses_agents = [&player_a, &player_b]
            .iter()
            .any(|p| p.kind == PlayerKind::Agent);
        GameRecord {
            game_id: plan.game_id.clone(),
            player_a,
            player_b,
            config: spec.config.clone(),
            rounds: state.rounds().to_vec(),
            outcome,
            started_at,
            finished_at,
            prompt_version: PROMPT_VERSION.to_string(),
            embedding_model_tag: uses_agents
                .then(|| self.vocabulary.as_ref().map(|v| v.model_tag().to_string()))
                .flatten(),
        }
    }

    async fn drive(
        &self,
        state: &mut GameState,
        player_a: &PlayerSpec,
        player_b: &PlayerSpec,
    ) -> Result<(), HarnessError> {
        let a = self.seat_player(player_a);
        let b = self.seat_player(player_b);
        while !state.is_finished() {
            let snapshot = &*state;
            let (move_a, move_b) = futures::join!(
                a.next_move(snapshot, Seat::A),
                b.next_move(snapshot, Seat::B)
            );
            let (word_a, valid_a) = self.judge(move_a?).await?;
            let (word_b, valid_b) = self.judge(move_b?).await?;
            state
                .submit_round(word_a, word_b, valid_a, valid_b)
                .expect("loop stops at the outcome");
        }
        Ok(())
    }

    async fn judge(&self, mv: Move) -> Result<(Word, bool), HarnessError> {
        match mv {
            Move::Word(w) => {
                let valid = match self.dictionary.mode() {
                    ValidationMode::Off => true,
                    _ => self.dictionary.check(&w).await?.exists,
                };
                Ok((w, valid))
            }
            Move::Unparseable(raw) if self.dictionary.mode() == ValidationMode::Off => {
                Err(HarnessError::UnparseableUnchecked(raw))
            }
            Move::Unparseable(raw) => {
                tracing::info!(reply = %raw, "reply is not a single word");
                Ok((
                    Word::parse(UNPARSEABLE_PLACEHOLDER).expect("placeholder is one token"),
                    false,
                ))
            }
        }
    }

    /// Plays `spec.games` games, up to `spec.parallel` at a time, appending
    /// each record to `log` in game order.
    pub async fn run(
        &self,
        spec: &TournamentSpec,
        log: &Path,
    ) -> Result<TournamentSummary, TournamentError> {
        self.check_player(&spec.player_a)?;
        self.check_player(&spec.player_b)?;
        spec.config
            .validate()
            .map_err(|e| TournamentError::Config(e.to_string()))?;
        if spec.games == 0 {
            return Err(TournamentError::Config("--games must be at least 1".into()));
        }
        let plans = plan_games(spec, self.clock);
        let taken = crate::storage::existing_ids(log)?;
        if let Some(p) = plans.iter().find(|p| taken.contains(&p.game_id)) {
            return Err(TournamentError::Config(format!(
                "{} already holds game {:?}; use another seed or log file",
                log.display(),
                p.game_id
            )));
        }
        let mut records = Vec::with_capacity(plans.len());
        let mut stream = futures::stream::iter(plans.iter())
            .map(|plan| self.play_game(spec, plan))
            .buffered(spec.parallel.max(1));
        while let Some(record) = stream.next().await {
            let path = log.to_path_buf();
            let to_store = record.clone();
            tokio::task::spawn_blocking(move || append_game(&path, &to_store))
                .await
                .expect("append task panicked")?;
            records.push(record);
        }
        Ok(TournamentSummary::from_records(&records))
    }
}

/// Outcome counts for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TournamentSummary {
    pub pair: (String, String),
    pub trials: usize,
    pub wins: usize,
    pub losses_repetition: usize,
    pub losses_invalid_word: usize,
    pub losses_non_convergence: usize,
    pub aborted: usize,
    pub avg_rounds_on_wins: Option<f64>,
}

impl TournamentSummary {
    pub fn from_records(records: &[GameRecord]) -> TournamentSummary {
        let aborted = records.iter().filter(|r| r.outcome.is_aborted()).count();
        let pair = records
            .first()
            .map(|r| r.pair_key())
            .unwrap_or_default();
        let stats = pair_stats(records);
        let s = stats.first();
        TournamentSummary {
            pair,
            trials: s.map_or(0, |s| s.trials),
            wins: s.map_or(0, |s| s.wins),
            losses_repetition: s.map_or(0, |s| s.losses_repetition),
            losses_invalid_word: s.map_or(0, |s| s.losses_invalid_word),
            losses_non_convergence: s.map_or(0, |s| s.losses_non_convergence),
            aborted,
            avg_rounds_on_wins: s.and_then(|s| s.avg_rounds_on_wins),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pair         {} / {}", self.pair.0, self.pair.1);
        let _ = writeln!(out, "trials       {}", self.trials);
        let _ = writeln!(out, "wins         {}", self.wins);
        let _ = writeln!(out, "repetition   {}", self.losses_repetition);
        let _ = writeln!(out, "invalid word {}", self.losses_invalid_word);
        let _ = writeln!(out, "no match     {}", self.losses_non_convergence);
        let _ = writeln!(out, "aborted      {}", self.aborted);
        let avg = self
            .avg_rounds_on_wins
            .map_or_else(|| "-".to_string(), |a| format!("{a:.2}"));
        let _ = writeln!(out, "avg rounds   {avg} (won games)");
        out
    }
}
