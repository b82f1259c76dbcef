//! State of one live game, independent of HTTP.
//!
//! Each seat submits its word for the open round; nothing about a pending
//! word is visible to the other seat until both are in and the round
//! resolves.

use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use wordsync_core::players::PROMPT_VERSION;
use wordsync_core::record::RecordOutcome;
use wordsync_core::{GameConfig, GameRecord, GameState, PlayerSpec, Seat, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Seat B is played by a model or agent.
    HumanVsLlm,
    HumanVsHuman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Human-vs-human game waiting for the second player.
    AwaitingJoin,
    /// The open round has at least one word submitted.
    WaitingForWords,
    /// The previous round was just revealed; nobody has played the open
    /// round yet.
    Revealed,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LiveError {
    #[error("unknown or wrong seat token")]
    Unauthorized,
    #[error("no such game")]
    NotFound,
    #[error("this seat already submitted a word for the round")]
    AlreadySubmitted,
    #[error("the second player has not joined yet")]
    NotStarted,
    #[error("the game is over")]
    Finished,
    #[error("wrong join code or game already full")]
    BadJoinCode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedRound {
    pub round: u32,
    pub word_a: String,
    pub word_b: String,
}

/// What one seat is allowed to see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameView {
    pub game_id: String,
    pub mode: Mode,
    pub seat: Seat,
    pub phase: Phase,
    /// Round open for submissions, or the last round once finished.
    pub round: u32,
    pub max_rounds: u32,
    pub rounds: Vec<RevealedRound>,
    pub used_words: Vec<String>,
    /// The caller's own word for the open round, if submitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub your_word: Option<String>,
    pub opponent_submitted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<RecordOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub join_code: Option<String>,
}

#[derive(Debug)]
pub struct LiveGame {
    game_id: String,
    mode: Mode,
    state: GameState,
    players: [PlayerSpec; 2],
    tokens: [Option<String>; 2],
    join_code: Option<String>,
    pending: [Option<(Word, bool)>; 2],
    phase: Phase,
    aborted: Option<String>,
    started_at: DateTime<Utc>,
    finished_at: Option<DateTime<Utc>>,
    last_activity: Instant,
    embedding_model_tag: Option<String>,
}

/// Result of a submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Submitted {
    /// Stored; waiting for the other seat.
    Pending,
    /// Both words were in and the round resolved.
    Resolved { finished: bool },
}

impl LiveGame {
    /// Human in seat A against a machine player in seat B.
    pub fn against_machine(
        game_id: String,
        config: GameConfig,
        opponent: PlayerSpec,
        token_a: String,
    ) -> LiveGame {
        LiveGame::build(game_id, Mode::HumanVsLlm, config, opponent, token_a, None)
    }

    /// Two humans; seat B is claimed later with `join_code`.
    pub fn between_humans(
        game_id: String,
        config: GameConfig,
        token_a: String,
        join_code: String,
    ) -> LiveGame {
        LiveGame::build(
            game_id,
            Mode::HumanVsHuman,
            config,
            PlayerSpec::human(),
            token_a,
            Some(join_code),
        )
    }

    fn build(
        game_id: String,
        mode: Mode,
        config: GameConfig,
        player_b: PlayerSpec,
        token_a: String,
        join_code: Option<String>,
    ) -> LiveGame {
        let phase = match mode {
            Mode::HumanVsHuman => Phase::AwaitingJoin,
            Mode::HumanVsLlm => Phase::Revealed,
        };
        LiveGame {
            game_id,
            mode,
            state: GameState::new(config).expect("config validated by the caller"),
            players: [PlayerSpec::human(), player_b],
            tokens: [Some(token_a), None],
            join_code,
            pending: [None, None],
            phase,
            aborted: None,
            started_at: Utc::now(),
            finished_at: None,
            last_activity: Instant::now(),
            embedding_model_tag: None,
        }
    }

    pub fn with_embedding_model_tag(mut self, tag: Option<String>) -> Self {
        self.embedding_model_tag = tag;
        self
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn player(&self, seat: Seat) -> &PlayerSpec {
        &self.players[seat.index()]
    }

    pub fn last_activity(&self) -> Instant {
        self.last_activity
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub fn has_submitted(&self, seat: Seat) -> bool {
        self.pending[seat.index()].is_some()
    }

    fn touch(&mut self) {
        self.last_activity = Instant::now();
    }

    /// Seat B claims the game.
    pub fn join(&mut self, code: &str, token_b: String) -> Result<(), LiveError> {
        if self.phase != Phase::AwaitingJoin || self.join_code.as_deref() != Some(code) {
            return Err(LiveError::BadJoinCode);
        }
        self.tokens[1] = Some(token_b);
        self.join_code = None;
        self.phase = Phase::Revealed;
        self.touch();
        Ok(())
    }

    pub fn seat_for(&self, token: &str) -> Result<Seat, LiveError> {
        Seat::BOTH
            .into_iter()
            .find(|s| self.tokens[s.index()].as_deref() == Some(token))
            .ok_or(LiveError::Unauthorized)
    }

    /// Whether `seat` may submit now.
    pub fn check_can_submit(&self, seat: Seat) -> Result<(), LiveError> {
        match self.phase {
            Phase::AwaitingJoin => Err(LiveError::NotStarted),
            Phase::Finished => Err(LiveError::Finished),
            _ if self.has_submitted(seat) => Err(LiveError::AlreadySubmitted),
            _ => Ok(()),
        }
    }

    /// Stores `seat`'s word for the open round and resolves the round when
    /// both words are in.
    pub fn submit(&mut self, seat: Seat, word: Word, valid: bool) -> Result<Submitted, LiveError> {
        self.check_can_submit(seat)?;
        self.pending[seat.index()] = Some((word, valid));
        if seat == Seat::A || self.mode == Mode::HumanVsHuman {
            self.touch();
        }
        match (&self.pending[0], &self.pending[1]) {
            (Some(_), Some(_)) => {}
            _ => {
                self.phase = Phase::WaitingForWords;
                return Ok(Submitted::Pending);
            }
        }
        let (word_a, valid_a) = self.pending[0].take().expect("checked");
        let (word_b, valid_b) = self.pending[1].take().expect("checked");
        let outcome = self
            .state
            .submit_round(word_a, word_b, valid_a, valid_b)
            .expect("phase is not finished");
        let finished = outcome.is_some();
        if finished {
            self.finish();
        } else {
            self.phase = Phase::Revealed;
        }
        Ok(Submitted::Resolved { finished })
    }

    /// Ends the game without a rules outcome; pending words are dropped.
    pub fn abort(&mut self, reason: &str) {
        if self.is_finished() {
            return;
        }
        self.pending = [None, None];
        self.aborted = Some(reason.to_string());
        self.finish();
    }

    fn finish(&mut self) {
        self.phase = Phase::Finished;
        self.finished_at = Some(Utc::now());
    }

    pub fn outcome(&self) -> Option<RecordOutcome> {
        if let Some(reason) = &self.aborted {
            return Some(RecordOutcome::Aborted {
                reason: reason.clone(),
            });
        }
        self.state.outcome().map(|o| RecordOutcome::from(*o))
    }

    pub fn view(&self, seat: Seat) -> GameView {
        let rounds = self
            .state
            .rounds()
            .iter()
            .map(|r| RevealedRound {
                round: r.index,
                word_a: r.word_a.as_str().to_string(),
                word_b: r.word_b.as_str().to_string(),
            })
            .collect();
        let round = if self.is_finished() {
            self.state.rounds().len() as u32
        } else {
            self.state.next_round_index()
        };
        GameView {
            game_id: self.game_id.clone(),
            mode: self.mode,
            seat,
            phase: self.phase,
            round,
            max_rounds: self.state.config().max_rounds,
            rounds,
            used_words: self.state.used_words().iter().cloned().collect(),
            your_word: self.pending[seat.index()]
                .as_ref()
                .map(|(w, _)| w.as_str().to_string()),
            opponent_submitted: self.pending[seat.other().index()].is_some(),
            outcome: self.outcome(),
            join_code: match seat {
                Seat::A => self.join_code.clone(),
                Seat::B => None,
            },
        }
    }

    /// Stored form of a finished game.
    pub fn to_record(&self) -> Option<GameRecord> {
        let outcome = self.outcome()?;
        Some(GameRecord {
            game_id: self.game_id.clone(),
            player_a: self.players[0].clone(),
            player_b: self.players[1].clone(),
            config: self.state.config().clone(),
            rounds: self.state.rounds().to_vec(),
            outcome,
            started_at: self.started_at,
            finished_at: self.finished_at.unwrap_or_else(Utc::now),
            prompt_version: PROMPT_VERSION.to_string(),
            embedding_model_tag: self.embedding_model_tag.clone(),
        })
    }
}
