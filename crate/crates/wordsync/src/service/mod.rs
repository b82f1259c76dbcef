//! HTTP service for live games with human players.
//!
//! Endpoints (JSON):
//!
//! * `POST /api/games` `{mode, opponent?, max_rounds?}` creates a game;
//! * `POST /api/games/{id}/join` `{code}` claims seat B of a human game;
//! * `POST /api/games/{id}/word` `{token, word}` submits a word;
//! * `GET /api/games/{id}?token=...` returns the caller's view;
//! * `GET /api/health`.
//!
//! Errors come back as `{code, message}`. Finished and expired games are
//! appended to the game log.

mod live;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::Rng;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use wordsync_core::players::AgentPolicy;
use wordsync_core::{EmbeddingTable, GameConfig, PlayerKind, PlayerSpec, Seat, Word};

pub use live::{GameView, LiveError, LiveGame, Mode, Phase, RevealedRound, Submitted};

use crate::dictionary::Dictionary;
use crate::llm::{ChatClient, LlmError};
use crate::storage::append_game;
use crate::tournament::{agent_word, UNPARSEABLE_PLACEHOLDER};

pub struct ServiceConfig {
    pub log_path: PathBuf,
    /// Games idle this long are closed.
    pub ttl: Duration,
    pub game_config: GameConfig,
    pub static_dir: Option<PathBuf>,
}

/// Players the service can put in the machine seat.
#[derive(Default)]
pub struct Machines {
    pub vocabulary: Option<Arc<EmbeddingTable>>,
    pub vocabulary_ref: Option<String>,
    pub chat: Option<ChatClient>,
}

pub struct AppState {
    config: ServiceConfig,
    dictionary: Arc<Dictionary>,
    machines: Machines,
    games: Mutex<HashMap<String, Arc<Mutex<LiveGame>>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            code: code.to_string(),
            message: message.into(),
            status: status.as_u16(),
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn upstream(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "upstream_unavailable", message)
    }
}

impl From<LiveError> for ApiError {
    fn from(e: LiveError) -> Self {
        let (status, code) = match e {
            LiveError::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized"),
            LiveError::NotFound => (StatusCode::NOT_FOUND, "not_found"),
            LiveError::AlreadySubmitted => (StatusCode::CONFLICT, "already_submitted"),
            LiveError::NotStarted => (StatusCode::CONFLICT, "not_started"),
            LiveError::Finished => (StatusCode::CONFLICT, "game_finished"),
            LiveError::BadJoinCode => (StatusCode::FORBIDDEN, "bad_join_code"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateRequest {
    pub mode: Mode,
    /// Machine player for `human_vs_llm`, e.g. `agent:balance` or
    /// `llm:gpt-4o-mini`.
    #[serde(default)]
    pub opponent: Option<String>,
    #[serde(default)]
    pub max_rounds: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatGrant {
    pub game_id: String,
    pub seat: Seat,
    pub token: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join_code: Option<String>,
    pub phase: Phase,
}

#[derive(Debug, Clone, Deserialize)]
pub struct JoinRequest {
    pub code: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct WordRequest {
    pub token: String,
    pub word: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordResponse {
    pub accepted: bool,
    pub phase: Phase,
    pub round: u32,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TokenQuery {
    pub token: String,
}

fn secret() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

fn join_code() -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ23456789";
    let mut rng = rand::rng();
    (0..6)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

impl AppState {
    pub fn new(config: ServiceConfig, dictionary: Arc<Dictionary>, machines: Machines) -> Arc<AppState> {
        Arc::new(AppState {
            config,
            dictionary,
            machines,
            games: Mutex::new(HashMap::new()),
        })
    }

    pub fn game_count(&self) -> usize {
        self.games.lock().unwrap().len()
    }

    fn game(&self, id: &str) -> Result<Arc<Mutex<LiveGame>>, ApiError> {
        self.games
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| LiveError::NotFound.into())
    }

    pub async fn create(self: &Arc<Self>, req: CreateRequest) -> Result<SeatGrant, ApiError> {
        let mut config = self.config.game_config.clone();
        config.validation_mode = self.dictionary.mode();
        if let Some(n) = req.max_rounds {
            config.max_rounds = n;
        }
        config
            .validate()
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let game_id = secret();
        let token = secret();
        let game = match req.mode {
            Mode::HumanVsHuman => {
                LiveGame::between_humans(game_id.clone(), config, token.clone(), join_code())
            }
            Mode::HumanVsLlm => {
                let text = req
                    .opponent
                    .as_deref()
                    .ok_or_else(|| ApiError::bad_request("human_vs_llm needs an opponent"))?;
                let opponent = self.machine_spec(text).await?;
                let tag = (opponent.kind == PlayerKind::Agent)
                    .then(|| self.machines.vocabulary.as_ref().map(|v| v.model_tag().to_string()))
                    .flatten();
                LiveGame::against_machine(game_id.clone(), config, opponent, token.clone())
                    .with_embedding_model_tag(tag)
            }
        };
        let grant = SeatGrant {
            game_id: game_id.clone(),
            seat: Seat::A,
            token,
            join_code: game.view(Seat::A).join_code,
            phase: game.phase(),
        };
        let mode = game.mode();
        self.games
            .lock()
            .unwrap()
            .insert(game_id.clone(), Arc::new(Mutex::new(game)));
        if mode == Mode::HumanVsLlm {
            self.open_machine_turn(&game_id);
        }
        Ok(grant)
    }

    async fn machine_spec(&self, text: &str) -> Result<PlayerSpec, ApiError> {
        let spec = PlayerSpec::parse(text).map_err(ApiError::bad_request)?;
        match spec.kind {
            PlayerKind::Human => Err(ApiError::bad_request(
                "use human_vs_human to play against a person",
            )),
            PlayerKind::Agent => {
                let vocab_ref = self
                    .machines
                    .vocabulary_ref
                    .as_deref()
                    .filter(|_| self.machines.vocabulary.is_some())
                    .ok_or_else(|| ApiError::bad_request("no agent vocabulary is loaded"))?;
                let seed = rand::rng().random();
                Ok(PlayerSpec::agent(spec.strategy.expect("parsed agent"), vocab_ref, seed))
            }
            PlayerKind::Llm => {
                let chat = self
                    .machines
                    .chat
                    .as_ref()
                    .ok_or_else(|| ApiError::upstream("no chat endpoint is configured"))?;
                chat.ping(&spec.model_id)
                    .await
                    .map_err(|e| ApiError::upstream(e.to_string()))?;
                Ok(spec)
            }
        }
    }

    pub fn join(&self, game_id: &str, code: &str) -> Result<SeatGrant, ApiError> {
        let game = self.game(game_id)?;
        let mut g = game.lock().unwrap();
        let token = secret();
        g.join(code, token.clone())?;
        Ok(SeatGrant {
            game_id: game_id.to_string(),
            seat: Seat::B,
            token,
            join_code: None,
            phase: g.phase(),
        })
    }

    pub fn view(&self, game_id: &str, token: &str) -> Result<GameView, ApiError> {
        let game = self.game(game_id)?;
        let g = game.lock().unwrap();
        let seat = g.seat_for(token)?;
        Ok(g.view(seat))
    }

    pub async fn submit(self: &Arc<Self>, game_id: &str, token: &str, raw: &str) -> Result<WordResponse, ApiError> {
        let game = self.game(game_id)?;
        let seat = {
            let g = game.lock().unwrap();
            let seat = g.seat_for(token)?;
            g.check_can_submit(seat)?;
            seat
        };
        let word = Word::parse(raw)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_word", e.to_string()))?;
        let valid = self
            .dictionary
            .check(&word)
            .await
            .map_err(|e| ApiError::upstream(e.to_string()))?
            .exists;
        let (result, response) = {
            let mut g = game.lock().unwrap();
            let result = g.submit(seat, word, valid)?;
            let view = g.view(seat);
            (
                result,
                WordResponse {
                    accepted: true,
                    phase: view.phase,
                    round: view.round,
                },
            )
        };
        self.after_submit(game_id, &game, result).await;
        Ok(response)
    }

    async fn after_submit(self: &Arc<Self>, game_id: &str, game: &Arc<Mutex<LiveGame>>, result: Submitted) {
        match result {
            Submitted::Resolved { finished: true } => self.persist(game).await,
            Submitted::Resolved { finished: false } => {
                let mode = game.lock().unwrap().mode();
                if mode == Mode::HumanVsLlm {
                    self.open_machine_turn(game_id);
                }
            }
            Submitted::Pending => {}
        }
    }

    /// Starts computing the machine seat's word for the round that just
    /// opened, before the human has played it.
    fn open_machine_turn(self: &Arc<Self>, game_id: &str) {
        let app = Arc::clone(self);
        let id = game_id.to_string();
        tokio::spawn(async move {
            if let Err(reason) = app.machine_turn(&id).await {
                tracing::warn!(game = %id, %reason, "machine player failed; aborting game");
                if let Ok(game) = app.game(&id) {
                    game.lock().unwrap().abort(&reason);
                    app.persist(&game).await;
                }
            }
        });
    }

    async fn machine_turn(self: &Arc<Self>, game_id: &str) -> Result<(), String> {
        let Ok(game) = self.game(game_id) else {
            return Ok(());
        };
        let (state, spec) = {
            let g = game.lock().unwrap();
            if g.check_can_submit(Seat::B).is_err() {
                return Ok(());
            }
            (g.state().clone(), g.player(Seat::B).clone())
        };
        let (word, valid) = match spec.kind {
            PlayerKind::Agent => {
                let vocab = self.machines.vocabulary.as_deref().ok_or("no vocabulary")?;
                let policy = AgentPolicy::new(
                    spec.strategy.ok_or("agent without strategy")?,
                    spec.seed.unwrap_or(0),
                );
                let w = agent_word(policy, &state, Seat::B, vocab).map_err(|e| e.to_string())?;
                (w, None)
            }
            _ => {
                let chat = self.machines.chat.as_ref().ok_or("no chat endpoint")?;
                match chat.next_word(&spec.model_id, &state, Seat::B).await {
                    Ok(w) => (w, None),
                    Err(LlmError::Unparseable(raw)) => {
                        tracing::info!(reply = %raw, "machine reply is not a word");
                        (
                            Word::parse(UNPARSEABLE_PLACEHOLDER).expect("one token"),
                            Some(false),
                        )
                    }
                    Err(LlmError::Transport(e)) => return Err(e.to_string()),
                }
            }
        };
        let valid = match valid {
            Some(v) => v,
            None => self
                .dictionary
                .check(&word)
                .await
                .map_err(|e| e.to_string())?
                .exists,
        };
        let result = {
            let mut g = game.lock().unwrap();
            // the round may have closed meanwhile (abort, expiry)
            if g.state().rounds().len() != state.rounds().len() {
                return Ok(());
            }
            match g.submit(Seat::B, word, valid) {
                Ok(r) => r,
                Err(_) => return Ok(()),
            }
        };
        Box::pin(self.after_submit(game_id, &game, result)).await;
        Ok(())
    }

    async fn persist(&self, game: &Arc<Mutex<LiveGame>>) {
        let Some(record) = game.lock().unwrap().to_record() else {
            return;
        };
        let path = self.config.log_path.clone();
        let id = record.game_id.clone();
        let res = tokio::task::spawn_blocking(move || append_game(&path, &record)).await;
        match res {
            Ok(Ok(())) => tracing::info!(game = %id, "game stored"),
            Ok(Err(e)) => tracing::error!(game = %id, error = %e, "could not store game"),
            Err(e) => tracing::error!(game = %id, error = %e, "store task failed"),
        }
    }

    /// Closes games idle for longer than the TTL. Unfinished ones are
    /// stored as aborted. Returns the ids removed.
    pub async fn sweep(&self, now: Instant) -> Vec<String> {
        let expired: Vec<(String, Arc<Mutex<LiveGame>>)> = {
            let mut games = self.games.lock().unwrap();
            let ids: Vec<String> = games
                .iter()
                .filter(|(_, g)| {
                    now.saturating_duration_since(g.lock().unwrap().last_activity()) >= self.config.ttl
                })
                .map(|(id, _)| id.clone())
                .collect();
            ids.into_iter()
                .filter_map(|id| games.remove(&id).map(|g| (id, g)))
                .collect()
        };
        let mut removed = Vec::with_capacity(expired.len());
        for (id, game) in expired {
            let was_open = {
                let mut g = game.lock().unwrap();
                let open = !g.is_finished();
                g.abort("expired");
                open
            };
            if was_open {
                self.persist(&game).await;
            }
            removed.push(id);
        }
        removed
    }
}

async fn create_game(
    State(app): State<Arc<AppState>>,
    Json(req): Json<CreateRequest>,
) -> Result<Json<SeatGrant>, ApiError> {
    app.create(req).await.map(Json)
}

async fn join_game(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<JoinRequest>,
) -> Result<Json<SeatGrant>, ApiError> {
    app.join(&id, &req.code).map(Json)
}

async fn submit_word(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<WordRequest>,
) -> Result<Json<WordResponse>, ApiError> {
    app.submit(&id, &req.token, &req.word).await.map(Json)
}

async fn get_game(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<TokenQuery>,
) -> Result<Json<GameView>, ApiError> {
    app.view(&id, &q.token).map(Json)
}

async fn health(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "games": app.game_count() }))
}

pub fn router(app: Arc<AppState>) -> Router {
    let static_dir = app.config.static_dir.clone();
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/games", post(create_game))
        .route("/api/games/{id}", get(get_game))
        .route("/api/games/{id}/join", post(join_game))
        .route("/api/games/{id}/word", post(submit_word))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the listener fails or the process is stopped, sweeping
/// idle games in the background.
pub async fn serve(listener: tokio::net::TcpListener, app: Arc<AppState>) -> std::io::Result<()> {
    let sweeper = Arc::clone(&app);
    let every = (app.config.ttl / 4).clamp(Duration::from_millis(100), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let gone = sweeper.sweep(Instant::now()).await;
            if !gone.is_empty() {
                tracing::info!(count = gone.len(), "closed idle games");
            }
        }
    });
    axum::serve(listener, router(app)).await
}
