//! Mock upstream servers and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use wordsync::embeddings::write_embedding_file;
use wordsync_core::EmbeddingTable;

#[path = "../../../core/tests/common/mod.rs"]
pub mod oracle;

async fn spawn(router: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router).await.unwrap();
    });
    format!("http://{addr}")
}

/// Wiktionary stand-in: `missing` is 404, `flaky` is always 500, `teapot`
/// is 418, everything else exists. Counts hits per word.
#[derive(Clone, Default)]
pub struct MockWiktionary {
    pub hits: Arc<Mutex<HashMap<String, usize>>>,
}

impl MockWiktionary {
    pub async fn start() -> (MockWiktionary, String) {
        let mock = MockWiktionary::default();
        let router = Router::new()
            .route("/{word}", get(wiktionary_lookup))
            .with_state(mock.clone());
        let base = spawn(router).await;
        (mock, base)
    }

    pub fn hits(&self, word: &str) -> usize {
        self.hits.lock().unwrap().get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.hits.lock().unwrap().values().sum()
    }
}

async fn wiktionary_lookup(
    State(mock): State<MockWiktionary>,
    UrlPath(word): UrlPath<String>,
) -> (StatusCode, String) {
    *mock.hits.lock().unwrap().entry(word.clone()).or_default() += 1;
    match word.as_str() {
        "missing" => (StatusCode::NOT_FOUND, "{}".into()),
        "flaky" => (StatusCode::INTERNAL_SERVER_ERROR, "boom".into()),
        "teapot" => (StatusCode::IM_A_TEAPOT, "short and stout".into()),
        _ => (StatusCode::OK, format!("{{\"en\":[{{\"definitions\":[\"{word}\"]}}]}}")),
    }
}

/// Chat completions stand-in. Records every request body. Model
/// `sync` always answers "Ocean."; `chatty` answers with a sentence;
/// `down` returns 503; other models answer `word<N>` with a global counter,
/// so they never agree.
#[derive(Clone, Default)]
pub struct MockChat {
    pub requests: Arc<Mutex<Vec<Value>>>,
    counter: Arc<Mutex<usize>>,
}

impl MockChat {
    pub async fn start() -> (MockChat, String) {
        let mock = MockChat::default();
        let router = Router::new()
            .route("/chat/completions", post(chat_completion))
            .route("/embeddings", post(embeddings))
            .with_state(mock.clone());
        let base = spawn(router).await;
        (mock, base)
    }

    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().unwrap().clone()
    }
}

async fn chat_completion(
    State(mock): State<MockChat>,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    mock.requests.lock().unwrap().push(body.clone());
    let model = body["model"].as_str().unwrap_or_default().to_string();
    let content = match model.as_str() {
        "sync" => "Ocean.".to_string(),
        "chatty" => "Well, I think the word should be ocean".to_string(),
        "down" => {
            return (
                StatusCode::SERVICE_UNAVAILABLE,
                Json(json!({"error": "overloaded"})),
            )
        }
        _ => {
            let mut n = mock.counter.lock().unwrap();
            *n += 1;
            format!("word{n}")
        }
    };
    (
        StatusCode::OK,
        Json(json!({
            "id": "mock",
            "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
        })),
    )
}

/// Deterministic 3-d vectors derived from the word bytes.
async fn embeddings(State(mock): State<MockChat>, Json(body): Json<Value>) -> Json<Value> {
    mock.requests.lock().unwrap().push(body.clone());
    let data: Vec<Value> = body["input"]
        .as_array()
        .cloned()
        .unwrap_or_default()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let s = w.as_str().unwrap_or_default();
            let sum: u32 = s.bytes().map(u32::from).sum();
            json!({
                "object": "embedding",
                "index": i,
                "embedding": [s.len() as f64, f64::from(sum % 97), f64::from(s.as_bytes()[0])]
            })
        })
        .collect();
    Json(json!({"object": "list", "data": data, "model": body["model"]}))
}

pub fn write_vocab(dir: &Path, n: usize, dim: usize, seed: u64) -> (std::path::PathBuf, EmbeddingTable) {
    let table = EmbeddingTable::synthetic(n, dim, seed);
    let path = dir.join("vocab.tsv");
    write_embedding_file(&path, &table).unwrap();
    (path, table)
}

pub mod sim {
    //! Random interleavings of create/join/submit/poll against the live
    //! game service, checking what each view reveals.

    use std::collections::{BTreeSet, HashMap};
    use std::path::Path;
    use std::sync::Arc;
    use std::time::Duration;

    use rand::seq::IndexedRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use serde_json::Value;
    use wordsync::dictionary::Dictionary;
    use wordsync::service::{AppState, CreateRequest, GameView, Machines, Mode, Phase, ServiceConfig};
    use wordsync::storage::read_log;
    use wordsync_core::{EmbeddingTable, GameConfig, Seat, ValidationMode};

    #[derive(Debug, Default)]
    pub struct SimReport {
        pub games: usize,
        pub finished: usize,
        pub views: usize,
        pub submits: usize,
        pub rejections: usize,
        pub violations: Vec<String>,
        pub stored: usize,
    }

    struct Tracked {
        id: String,
        mode: Mode,
        tokens: [Option<String>; 2],
        code: Option<String>,
        /// (seat, revealed rounds at the time, own pending word, strings in the view)
        views: Vec<(Seat, usize, Option<String>, BTreeSet<String>)>,
        final_view: Option<GameView>,
    }

    fn strings(v: &Value, out: &mut BTreeSet<String>) {
        match v {
            Value::String(s) => {
                out.insert(s.clone());
            }
            Value::Array(a) => a.iter().for_each(|x| strings(x, out)),
            Value::Object(o) => o.values().for_each(|x| strings(x, out)),
            _ => {}
        }
    }

    pub fn app(log: &Path, vocabulary: EmbeddingTable) -> Arc<AppState> {
        AppState::new(
            ServiceConfig {
                log_path: log.to_path_buf(),
                ttl: Duration::from_secs(3600),
                game_config: GameConfig {
                    max_rounds: 6,
                    validation_mode: ValidationMode::Off,
                    ..GameConfig::default()
                },
                static_dir: None,
            },
            Arc::new(Dictionary::Off),
            Machines {
                vocabulary: Some(Arc::new(vocabulary)),
                vocabulary_ref: Some("sim-vocab".into()),
                chat: None,
            },
        )
    }

    fn expect_code(report: &mut SimReport, what: &str, got: Result<impl std::fmt::Debug, wordsync::service::ApiError>, code: &str) {
        match got {
            Err(e) if e.code == code => report.rejections += 1,
            other => report
                .violations
                .push(format!("{what}: expected {code}, got {other:?}")),
        }
    }

    pub async fn simulate(total: usize, seed: u64, log: &Path) -> SimReport {
        let vocab = EmbeddingTable::synthetic(40, 4, seed);
        let pool: Vec<String> = vocab.words().take(10).map(String::from).collect();
        let app = app(log, vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = SimReport::default();
        let mut games: Vec<Tracked> = Vec::new();
        let mut active: Vec<usize> = Vec::new();
        let mut idle_steps = 0usize;

        while games.len() < total || !active.is_empty() {
            let create = games.len() < total && (active.len() < 12 || rng.random_bool(0.05));
            if create {
                let mode = if rng.random_bool(0.5) { Mode::HumanVsHuman } else { Mode::HumanVsLlm };
                let opponent = ["agent:balance", "agent:mirror", "agent:random"]
                    .choose(&mut rng)
                    .map(|s| s.to_string());
                let grant = app
                    .create(CreateRequest {
                        mode,
                        opponent: (mode == Mode::HumanVsLlm).then_some(opponent).flatten(),
                        max_rounds: Some(rng.random_range(1..=6)),
                    })
                    .await
                    .expect("create");
                games.push(Tracked {
                    id: grant.game_id,
                    mode,
                    tokens: [Some(grant.token), None],
                    code: grant.join_code,
                    views: Vec::new(),
                    final_view: None,
                });
                active.push(games.len() - 1);
                continue;
            }
            let slot = rng.random_range(0..active.len());
            let gi = active[slot];
            let g = &mut games[gi];
            let seat = if rng.random_bool(0.5) { Seat::A } else { Seat::B };

            // join human games
            if g.mode == Mode::HumanVsHuman && g.tokens[1].is_none() {
                if rng.random_bool(0.2) {
                    expect_code(&mut report, "bad join", app.join(&g.id, "WRONG!"), "bad_join_code");
                    continue;
                }
                if rng.random_bool(0.3) {
                    let token = g.tokens[0].clone().unwrap();
                    expect_code(&mut report, "submit before join", app.submit(&g.id, &token, "sun").await, "not_started");
                    continue;
                }
                let code = g.code.clone().unwrap();
                let grant = app.join(&g.id, &code).expect("join");
                g.tokens[1] = Some(grant.token);
                expect_code(&mut report, "second join", app.join(&g.id, &code), "bad_join_code");
                continue;
            }
            if rng.random_bool(0.03) {
                expect_code(&mut report, "bogus token", app.view(&g.id, "not-a-token"), "unauthorized");
                continue;
            }
            let Some(token) = g.tokens[seat.index()].clone() else {
                // machine seat: let its task run
                tokio::task::yield_now().await;
                continue;
            };

            let view = app.view(&g.id, &token).expect("view");
            report.views += 1;
            let mut seen = BTreeSet::new();
            strings(&serde_json::to_value(&view).unwrap(), &mut seen);
            g.views.push((seat, view.rounds.len(), view.your_word.clone(), seen));

            if view.phase == Phase::Finished {
                if view.outcome.is_none() {
                    report.violations.push(format!("{}: finished without outcome", g.id));
                }
                let other = g.tokens[seat.other().index()].clone();
                let other_done = other.is_none_or(|t| app.view(&g.id, &t).unwrap().phase == Phase::Finished);
                if other_done {
                    g.final_view = Some(view);
                    active.swap_remove(slot);
                    report.finished += 1;
                } else {
                    report.violations.push(format!("{}: seats disagree on finish", g.id));
                }
                continue;
            }
            if view.your_word.is_some() {
                if rng.random_bool(0.2) {
                    expect_code(&mut report, "double submit", app.submit(&g.id, &token, "extra").await, "already_submitted");
                } else {
                    idle_steps += 1;
                    if idle_steps.is_multiple_of(64) {
                        tokio::time::sleep(Duration::from_millis(1)).await;
                    }
                    tokio::task::yield_now().await;
                }
                continue;
            }
            let word = pool.choose(&mut rng).unwrap().clone();
            let raw = match rng.random_range(0..10) {
                0 => word.to_uppercase(),
                1 => format!("{word}!"),
                _ => word,
            };
            match app.submit(&g.id, &token, &raw).await {
                Ok(r) if r.accepted => report.submits += 1,
                other => report.violations.push(format!("{}: submit failed {other:?}", g.id)),
            }
        }

        report.games = games.len();
        for g in &games {
            check_hiding(g, &mut report);
        }
        let stored = read_log(log).expect("log readable");
        report.stored = stored.games.len();
        let by_id: HashMap<&str, &wordsync_core::GameRecord> =
            stored.games.iter().map(|r| (r.game_id.as_str(), r)).collect();
        for g in &games {
            let fv = g.final_view.as_ref().unwrap();
            match by_id.get(g.id.as_str()) {
                None => report.violations.push(format!("{}: not stored", g.id)),
                Some(r) => {
                    let words: Vec<(String, String)> = r
                        .rounds
                        .iter()
                        .map(|p| (p.word_a.as_str().to_string(), p.word_b.as_str().to_string()))
                        .collect();
                    let seen: Vec<(String, String)> =
                        fv.rounds.iter().map(|p| (p.word_a.clone(), p.word_b.clone())).collect();
                    if words != seen || Some(&r.outcome) != fv.outcome.as_ref() || r.validate().is_err() {
                        report.violations.push(format!("{}: stored record differs from play", g.id));
                    }
                }
            }
        }
        report
    }

    /// No view taken while round k+1 was open may contain the opponent's
    /// round k+1 word, unless the viewer also played it or it was already
    /// public.
    fn check_hiding(g: &Tracked, report: &mut SimReport) {
        let Some(fv) = &g.final_view else {
            report.violations.push(format!("{}: never finished", g.id));
            return;
        };
        for (seat, revealed, own, seen) in &g.views {
            if *revealed > fv.rounds.len() {
                report.violations.push(format!("{}: view ahead of the game", g.id));
                continue;
            }
            let Some(next) = fv.rounds.get(*revealed) else {
                continue;
            };
            let hidden = match seat {
                Seat::A => &next.word_b,
                Seat::B => &next.word_a,
            };
            let public: BTreeSet<&str> = fv.rounds[..*revealed]
                .iter()
                .flat_map(|r| [r.word_a.as_str(), r.word_b.as_str()])
                .collect();
            if seen.contains(hidden) && own.as_deref() != Some(hidden) && !public.contains(hidden.as_str()) {
                report.violations.push(format!(
                    "{}: seat {seat:?} saw {hidden:?} before round {} was revealed",
                    g.id,
                    revealed + 1
                ));
            }
        }
    }

    /// A view leaking the opponent's pending word must be flagged.
    pub fn leak_is_detected() -> bool {
        use wordsync::service::RevealedRound;
        let final_view = GameView {
            game_id: "g".into(),
            mode: Mode::HumanVsHuman,
            seat: Seat::A,
            phase: Phase::Finished,
            round: 1,
            max_rounds: 1,
            rounds: vec![RevealedRound {
                round: 1,
                word_a: "sun".into(),
                word_b: "moon".into(),
            }],
            used_words: vec!["moon".into(), "sun".into()],
            your_word: None,
            opponent_submitted: false,
            outcome: None,
            join_code: None,
        };
        let leaky: BTreeSet<String> = ["g".to_string(), "moon".to_string()].into();
        let g = Tracked {
            id: "g".into(),
            mode: Mode::HumanVsHuman,
            tokens: [None, None],
            code: None,
            views: vec![(Seat::A, 0, Some("sun".into()), leaky)],
            final_view: Some(final_view),
        };
        let mut report = SimReport::default();
        check_hiding(&g, &mut report);
        report.violations.len() == 1
    }
}
