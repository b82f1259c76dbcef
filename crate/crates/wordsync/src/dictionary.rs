//! Word existence checks: Wiktionary lookups, a local word list, or none.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use tokio::sync::{OnceCell, Semaphore};
use tokio::time::Instant;
use wordsync_core::{ValidationMode, Word};

use crate::retry::{RetryPolicy, TransportError};

pub const WIKTIONARY_BASE: &str = "https://en.wiktionary.org/api/rest_v1/page/definition";
const USER_AGENT: &str = concat!("wordsync/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LookupSource {
    Remote,
    Local,
    Cache,
    /// Validation is switched off; every word passes.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub word: String,
    pub exists: bool,
    pub source: LookupSource,
    pub checked_at: DateTime<Utc>,
}

#[derive(Debug, thiserror::Error)]
pub enum DictionaryError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    BadCacheLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("validation mode {0} needs {1}")]
    NotConfigured(ValidationMode, &'static str),
}

/// Lookup pacing for the public endpoint.
#[derive(Debug, Clone, Copy)]
pub struct RateLimit {
    pub max_concurrent: usize,
    pub min_spacing: Duration,
}

impl Default for RateLimit {
    fn default() -> Self {
        RateLimit {
            max_concurrent: 4,
            min_spacing: Duration::from_millis(100),
        }
    }
}

/// Words loaded from a list: one per line, `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn load(path: &Path) -> Result<WordList, DictionaryError> {
        let file = File::open(path).map_err(|source| DictionaryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut words = HashSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|source| DictionaryError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let entry = line.split('#').next().unwrap_or("").trim();
            if let Ok(w) = Word::parse(entry) {
                words.insert(w.as_str().to_string());
            }
        }
        Ok(WordList { words })
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> WordList {
        WordList {
            words: words
                .into_iter()
                .filter_map(|w| Word::parse(w).ok())
                .map(|w| w.as_str().to_string())
                .collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

struct Pacer {
    permits: Semaphore,
    next_slot: tokio::sync::Mutex<Instant>,
    spacing: Duration,
}

impl Pacer {
    fn new(limit: RateLimit) -> Pacer {
        Pacer {
            permits: Semaphore::new(limit.max_concurrent.max(1)),
            next_slot: tokio::sync::Mutex::new(Instant::now()),
            spacing: limit.min_spacing,
        }
    }

    async fn wait_turn(&self) {
        let mut next = self.next_slot.lock().await;
        let now = Instant::now();
        if *next > now {
            tokio::time::sleep_until(*next).await;
        }
        *next = Instant::now().max(*next) + self.spacing;
    }
}

/// Wiktionary client with a persistent word → exists cache.
pub struct RemoteDictionary {
    http: reqwest::Client,
    base_url: String,
    retry: RetryPolicy,
    pacer: Pacer,
    entries: Mutex<HashMap<String, Arc<OnceCell<bool>>>>,
    cache_file: Option<(PathBuf, Mutex<File>)>,
}

impl RemoteDictionary {
    pub fn new(base_url: &str) -> Result<RemoteDictionary, TransportError> {
        let http = reqwest::Client::builder()
            .user_agent(USER_AGENT)
            .timeout(Duration::from_secs(30))
            .build()?;
        Ok(RemoteDictionary {
            http,
            base_url: base_url.trim_end_matches('/').to_string(),
            retry: RetryPolicy::default(),
            pacer: Pacer::new(RateLimit::default()),
            entries: Mutex::new(HashMap::new()),
            cache_file: None,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_rate_limit(mut self, limit: RateLimit) -> Self {
        self.pacer = Pacer::new(limit);
        self
    }

    /// Loads earlier results from `path` and appends new ones to it.
    pub fn with_cache_file(mut self, path: &Path) -> Result<Self, DictionaryError> {
        let io = |source| DictionaryError::Io {
            path: path.to_path_buf(),
            source,
        };
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            let mut entries = self.entries.lock().unwrap();
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let (word, flag) = parse_cache_line(&line).ok_or_else(|| {
                    DictionaryError::BadCacheLine {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("expected word<TAB>0|1, got {line:?}"),
                    }
                })?;
                // first entry wins; entries never change once written
                entries
                    .entry(word.to_string())
                    .or_insert_with(|| Arc::new(OnceCell::new_with(Some(flag))));
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        self.cache_file = Some((path.to_path_buf(), Mutex::new(file)));
        Ok(self)
    }

    pub fn cached(&self, word: &str) -> Option<bool> {
        let entries = self.entries.lock().unwrap();
        entries.get(word).and_then(|c| c.get().copied())
    }

    pub async fn check(&self, word: &Word) -> Result<ValidationResult, DictionaryError> {
        let key = word.as_str();
        let cell = {
            let mut entries = self.entries.lock().unwrap();
            entries.entry(key.to_string()).or_default().clone()
        };
        let mut fetched = false;
        let fetched_flag = &mut fetched;
        let exists = *cell
            .get_or_try_init(|| async move {
                *fetched_flag = true;
                let exists = self.fetch(key).await?;
                self.persist(key, exists)?;
                Ok::<bool, DictionaryError>(exists)
            })
            .await?;
        Ok(ValidationResult {
            word: key.to_string(),
            exists,
            source: if fetched {
                LookupSource::Remote
            } else {
                LookupSource::Cache
            },
            checked_at: Utc::now(),
        })
    }

    async fn fetch(&self, word: &str) -> Result<bool, TransportError> {
        let url = format!("{}/{}", self.base_url, encode_path_segment(word));
        self.retry
            .run(|| async {
                let _permit = self.pacer.permits.acquire().await.expect("never closed");
                self.pacer.wait_turn().await;
                let resp = self.http.get(&url).send().await?;
                match resp.status() {
                    StatusCode::OK => Ok(true),
                    StatusCode::NOT_FOUND => Ok(false),
                    other => {
                        let body = resp.text().await.unwrap_or_default();
                        Err(TransportError::status(other, body))
                    }
                }
            })
            .await
    }

    fn persist(&self, word: &str, exists: bool) -> Result<(), DictionaryError> {
        if let Some((path, file)) = &self.cache_file {
            let mut f = file.lock().unwrap();
            writeln!(f, "{word}\t{}", u8::from(exists))
                .and_then(|_| f.flush())
                .map_err(|source| DictionaryError::Io {
                    path: path.clone(),
                    source,
                })?;
        }
        Ok(())
    }
}

fn parse_cache_line(line: &str) -> Option<(&str, bool)> {
    let (word, flag) = line.split_once('\t')?;
    let exists = match flag.trim() {
        "1" => true,
        "0" => false,
        _ => return None,
    };
    (!word.is_empty()).then_some((word, exists))
}

/// Percent-encodes everything outside the unreserved URL set.
fn encode_path_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

/// Validator used by the harness: one of the three modes.
pub enum Dictionary {
    Remote(Box<RemoteDictionary>),
    Local(WordList),
    Off,
}

impl Dictionary {
    pub fn mode(&self) -> ValidationMode {
        match self {
            Dictionary::Remote(_) => ValidationMode::Remote,
            Dictionary::Local(_) => ValidationMode::Local,
            Dictionary::Off => ValidationMode::Off,
        }
    }

    pub async fn check(&self, word: &Word) -> Result<ValidationResult, DictionaryError> {
        let (exists, source) = match self {
            Dictionary::Remote(r) => return r.check(word).await,
            Dictionary::Local(list) => (list.contains(word.as_str()), LookupSource::Local),
            Dictionary::Off => (true, LookupSource::Unchecked),
        };
        Ok(ValidationResult {
            word: word.as_str().to_string(),
            exists,
            source,
            checked_at: Utc::now(),
        })
    }
}
