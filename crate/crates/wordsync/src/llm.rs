//! Chat-completion client for model players.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use wordsync_core::players::{chat_messages, parse_word_reply, ChatMessage, UnparseableReply};
use wordsync_core::{GameState, Seat, Word};

use crate::retry::{RetryPolicy, TransportError};

pub const API_BASE_ENV: &str = "WORDSYNC_API_BASE";
pub const API_KEY_ENV: &str = "WORDSYNC_API_KEY";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("reply is not a single word: {0:?}")]
    Unparseable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("environment variable {0} is not set")]
pub struct MissingCredential(pub &'static str);

#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub api_base: String,
    pub api_key: String,
    /// Requests in flight at once, across all games.
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
    /// Replay the player's own earlier words as assistant turns.
    pub own_turns: bool,
    pub timeout: Duration,
}

impl LlmConfig {
    pub fn new(api_base: &str, api_key: &str) -> LlmConfig {
        LlmConfig {
            api_base: api_base.trim_end_matches('/').to_string(),
            api_key: api_key.to_string(),
            max_concurrency: 4,
            retry: RetryPolicy::default(),
            own_turns: true,
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads `WORDSYNC_API_BASE` (optional) and `WORDSYNC_API_KEY`.
    pub fn from_env() -> Result<LlmConfig, MissingCredential> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(MissingCredential(API_KEY_ENV))?;
        let base = std::env::var(API_BASE_ENV).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        Ok(LlmConfig::new(&base, &key))
    }
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Debug, Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Clone)]
pub struct ChatClient {
    http: reqwest::Client,
    config: Arc<LlmConfig>,
    permits: Arc<Semaphore>,
}

impl ChatClient {
    pub fn new(config: LlmConfig) -> Result<ChatClient, TransportError> {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()?;
        let permits = Arc::new(Semaphore::new(config.max_concurrency.max(1)));
        Ok(ChatClient {
            http,
            config: Arc::new(config),
            permits,
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// One chat completion; returns the text of the first choice.
    pub async fn complete(
        &self,
        model: &str,
        messages: &[ChatMessage],
        temperature: f64,
        max_tokens: u32,
    ) -> Result<String, TransportError> {
        let _permit = self.permits.acquire().await.expect("semaphore is never closed");
        let url = format!("{}/chat/completions", self.config.api_base);
        let body = ChatRequest {
            model,
            messages,
            temperature,
            max_tokens,
        };
        self.config
            .retry
            .run(|| async {
                let resp = self
                    .http
                    .post(&url)
                    .bearer_auth(&self.config.api_key)
                    .json(&body)
                    .send()
                    .await?;
                let status = resp.status();
                if !status.is_success() {
                    let text = resp.text().await.unwrap_or_default();
                    return Err(TransportError::status(status, text));
                }
                let parsed: ChatResponse = resp
                    .json()
                    .await
                    .map_err(|e| TransportError::Decode(e.to_string()))?;
                parsed
                    .choices
                    .into_iter()
                    .next()
                    .map(|c| c.message.content.unwrap_or_default())
                    .ok_or_else(|| TransportError::Decode("no choices in response".into()))
            })
            .await
    }

    /// Asks `model` for the word `seat` plays next.
    pub async fn next_word(
        &self,
        model: &str,
        state: &GameState,
        seat: Seat,
    ) -> Result<Word, LlmError> {
        let messages = chat_messages(state, seat, self.config.own_turns);
        let cfg = state.config();
        let reply = self
            .complete(model, &messages, cfg.temperature, cfg.max_output_tokens)
            .await?;
        parse_word_reply(&reply).map_err(|UnparseableReply(raw)| LlmError::Unparseable(raw))
    }

    /// Cheap reachability probe: a one-token completion.
    pub async fn ping(&self, model: &str) -> Result<(), TransportError> {
        let messages = [ChatMessage {
            role: wordsync_core::players::Role::User,
            content: "Reply with one word: ready".into(),
        }];
        self.complete(model, &messages, 0.0, 1).await.map(|_| ())
    }
}
