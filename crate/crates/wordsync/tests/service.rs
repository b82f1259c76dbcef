mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::sim;
use serde_json::{json, Value};
use wordsync::dictionary::Dictionary;
use wordsync::service::{router, AppState, CreateRequest, Machines, Mode, ServiceConfig};
use wordsync::storage::read_log;
use wordsync_core::{EmbeddingTable, GameConfig, RecordOutcome};

#[test]
fn hiding_check_catches_a_leak() {
    assert!(sim::leak_is_detected());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn random_interleavings_hide_pending_words() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("live.jsonl");
    let report = sim::simulate(150, 9, &log).await;
    assert!(report.violations.is_empty(), "{:#?}", &report.violations[..report.violations.len().min(10)]);
    assert_eq!(report.finished, 150);
    assert_eq!(report.stored, 150);
    assert!(report.rejections > 0);
}

fn plain_app(log: &std::path::Path, ttl: Duration, machines: Machines) -> Arc<AppState> {
    AppState::new(
        ServiceConfig {
            log_path: log.to_path_buf(),
            ttl,
            game_config: GameConfig::default(),
            static_dir: None,
        },
        Arc::new(Dictionary::Off),
        machines,
    )
}

#[tokio::test]
async fn create_rejects_unusable_opponents() {
    let dir = tempfile::tempdir().unwrap();
    let app = plain_app(&dir.path().join("l.jsonl"), Duration::from_secs(60), Machines::default());
    let req = |opponent: Option<&str>| CreateRequest {
        mode: Mode::HumanVsLlm,
        opponent: opponent.map(String::from),
        max_rounds: None,
    };
    assert_eq!(app.create(req(None)).await.unwrap_err().code, "bad_request");
    assert_eq!(app.create(req(Some("agent:balance"))).await.unwrap_err().code, "bad_request");
    assert_eq!(app.create(req(Some("llm:gpt-4o"))).await.unwrap_err().code, "upstream_unavailable");
    assert_eq!(app.create(req(Some("human"))).await.unwrap_err().code, "bad_request");
    let zero = CreateRequest {
        mode: Mode::HumanVsHuman,
        opponent: None,
        max_rounds: Some(0),
    };
    assert_eq!(app.create(zero).await.unwrap_err().code, "bad_request");
    assert_eq!(app.game_count(), 0);
}

#[tokio::test]
async fn idle_games_expire_as_aborted() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l.jsonl");
    let app = plain_app(&log, Duration::from_secs(5), Machines::default());
    let grant = app
        .create(CreateRequest {
            mode: Mode::HumanVsHuman,
            opponent: None,
            max_rounds: None,
        })
        .await
        .unwrap();
    let b = app.join(&grant.game_id, grant.join_code.as_deref().unwrap()).unwrap();
    app.submit(&grant.game_id, &grant.token, "sun").await.unwrap();
    app.submit(&grant.game_id, &b.token, "moon").await.unwrap();

    assert!(app.sweep(Instant::now()).await.is_empty());
    let gone = app.sweep(Instant::now() + Duration::from_secs(6)).await;
    assert_eq!(gone, vec![grant.game_id.clone()]);
    assert_eq!(app.view(&grant.game_id, &grant.token).unwrap_err().code, "not_found");
    let games = read_log(&log).unwrap().games;
    assert_eq!(games.len(), 1);
    assert_eq!(games[0].rounds.len(), 1);
    assert_eq!(
        games[0].outcome,
        RecordOutcome::Aborted {
            reason: "expired".into()
        }
    );
}

#[tokio::test]
async fn http_round_trip_against_an_agent() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l.jsonl");
    let machines = Machines {
        vocabulary: Some(Arc::new(EmbeddingTable::synthetic(30, 3, 1))),
        vocabulary_ref: Some("v".into()),
        chat: None,
    };
    let app = plain_app(&log, Duration::from_secs(60), machines);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, router(app)).await.unwrap() });
    let http = reqwest::Client::new();

    let health: Value = http.get(format!("{base}/api/health")).send().await.unwrap().json().await.unwrap();
    assert_eq!(health["status"], "ok");

    let grant: Value = http
        .post(format!("{base}/api/games"))
        .json(&json!({"mode": "human_vs_llm", "opponent": "agent:balance", "max_rounds": 3}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let id = grant["game_id"].as_str().unwrap();
    let token = grant["token"].as_str().unwrap();

    let resp = http
        .post(format!("{base}/api/games/{id}/word"))
        .json(&json!({"token": token, "word": "two words"}))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);
    let err: Value = resp.json().await.unwrap();
    assert_eq!(err["code"], "invalid_word");

    let resp = http.get(format!("{base}/api/games/{id}?token=wrong")).send().await.unwrap();
    assert_eq!(resp.status(), 401);

    let words = ["apple", "banana", "cherry"];
    for (i, word) in words.iter().enumerate() {
        let r = http
            .post(format!("{base}/api/games/{id}/word"))
            .json(&json!({"token": token, "word": word}))
            .send()
            .await
            .unwrap();
        assert!(r.status().is_success());
        // wait for the agent to answer
        let mut view: Value = Value::Null;
        for _ in 0..200 {
            view = http
                .get(format!("{base}/api/games/{id}?token={token}"))
                .send()
                .await
                .unwrap()
                .json()
                .await
                .unwrap();
            if view["rounds"].as_array().unwrap().len() > i || view["phase"] == "finished" {
                break;
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
        if view["phase"] == "finished" {
            break;
        }
    }
    let view: Value = http
        .get(format!("{base}/api/games/{id}?token={token}"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(view["phase"], "finished");
    let r = http
        .post(format!("{base}/api/games/{id}/word"))
        .json(&json!({"token": token, "word": "late"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 409);
    let games = read_log(&log).unwrap().games;
    assert_eq!(games.len(), 1);
    assert_eq!(games[0].player_b.model_id, "agent:balance");
    assert_eq!(games[0].embedding_model_tag.as_deref(), Some("synthetic-3d-1"));
}
