//! Embedding files, the remote embeddings endpoint, and the word cache.
//!
//! File format (UTF-8): a header line `model_tag<TAB>dim`, then one
//! `word<TAB>v1,v2,...,vd` line per word. The same format serves as
//! vocabulary file for agents and as on-disk cache.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::OnceCell;
use wordsync_core::{Embedding, EmbeddingError, EmbeddingSource, EmbeddingTable, Word};

use crate::retry::{RetryPolicy, TransportError};

pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-3-small";

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("no embedding for {0:?}")]
    UnknownWord(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Vector(#[from] EmbeddingError),
    #[error("embeddings come from model {found:?}, expected {expected:?}")]
    ModelMismatch { expected: String, found: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> EmbedError + '_ {
    move |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_embedding_file(path: &Path) -> Result<EmbeddingTable, EmbedError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_embeddings(BufReader::new(file), path)
}

pub fn parse_embeddings(reader: impl BufRead, path: &Path) -> Result<EmbeddingTable, EmbedError> {
    let bad = |line: usize, message: String| EmbedError::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) => {
                let l = l.map_err(io_err(path))?;
                if !l.trim().is_empty() {
                    break l;
                }
            }
            None => return Err(bad(1, "missing header line".into())),
        }
    };
    let (tag, dim) = header
        .split_once('\t')
        .ok_or_else(|| bad(1, format!("expected model_tag<TAB>dim, got {header:?}")))?;
    let dim: usize = dim
        .trim()
        .parse()
        .ok()
        .filter(|d| *d > 0)
        .ok_or_else(|| bad(1, format!("bad dimension {dim:?}")))?;
    let mut table = EmbeddingTable::new(tag.trim(), dim);
    for (i, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, values) = line
            .split_once('\t')
            .ok_or_else(|| bad(i + 1, "expected word<TAB>values".into()))?;
        let values: Vec<f64> = values
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(i + 1, e.to_string()))?;
        let vector = Embedding::new(values).map_err(|e| bad(i + 1, e.to_string()))?;
        table
            .insert(word, vector)
            .map_err(|e| bad(i + 1, e.to_string()))?;
    }
    Ok(table)
}

/// Writes `table` in file format. `f64` Display is the shortest string that
/// parses back to the same value, so the round trip is exact.
pub fn write_embedding_file(path: &Path, table: &EmbeddingTable) -> Result<(), EmbedError> {
    let tmp = path.with_extension("tmp");
    {
        let mut out = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        write_embeddings(&mut out, table).map_err(io_err(&tmp))?;
        out.into_inner()
            .map_err(|e| e.into_error())
            .and_then(|f| f.sync_all())
            .map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_embeddings(out: &mut impl Write, table: &EmbeddingTable) -> std::io::Result<()> {
    writeln!(out, "{}\t{}", table.model_tag(), table.dim())?;
    for (word, v) in table.iter() {
        write!(out, "{word}\t")?;
        for (i, x) in v.values().iter().enumerate() {
            if i > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{x}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Debug, Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Debug, Deserialize)]
struct EmbeddingDatum {
    #[serde(default)]
    index: Option<usize>,
    embedding: Vec<f64>,
}

/// Client for a `POST {base}/embeddings` endpoint.
#[derive(Clone)]
pub struct RemoteEmbeddings {
    http: reqwest::Client,
    base_url: String,
    api_key: String,
    model: String,
    retry: RetryPolicy,
}

impl RemoteEmbeddings {
    pub fn new(base_url: &str, api_key: &str, model: &str) -> Result<RemoteEmbeddings, TransportError> {
        Ok(RemoteEmbeddings {
            http: reqwest::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()?,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: api_key.to_string(),
            model: model.to_string(),
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// One vector per input, in input order.
    pub async fn fetch(&self, words: &[&str]) -> Result<Vec<Vec<f64>>, TransportError> {
        let url = format!("{}/embeddings", self.base_url);
        let body = EmbeddingRequest {
            model: &self.model,
            input: words,
        };
        self.retry
            .run(|| async {
                let resp = self
                    .http
                    .post(&url)
                    .bearer_auth(&self.api_key)
                    .json(&body)
                    .send()
                    .await?;
                let status = resp.status();
                if !status.is_success() {
                    return Err(TransportError::status(status, resp.text().await.unwrap_or_default()));
                }
                let mut parsed: EmbeddingResponse = resp
                    .json()
                    .await
                    .map_err(|e| TransportError::Decode(e.to_string()))?;
                if parsed.data.len() != words.len() {
                    return Err(TransportError::Decode(format!(
                        "asked for {} embeddings, got {}",
                        words.len(),
                        parsed.data.len()
                    )));
                }
                parsed.data.sort_by_key(|d| d.index.unwrap_or(0));
                Ok(parsed.data.into_iter().map(|d| d.embedding).collect())
            })
            .await
    }
}

pub enum EmbeddingProvider {
    /// Vectors from a file; words outside it are unknown.
    Local(EmbeddingTable),
    Remote(RemoteEmbeddings),
}

/// Word → vector cache in front of a provider. Concurrent requests for the
/// same word share one fetch.
pub struct EmbeddingStore {
    provider: EmbeddingProvider,
    model_tag: String,
    dim: Mutex<Option<usize>>,
    cells: Mutex<HashMap<String, Arc<OnceCell<Embedding>>>>,
    fetches: std::sync::atomic::AtomicUsize,
}

impl EmbeddingStore {
    pub fn local(table: EmbeddingTable) -> EmbeddingStore {
        let tag = table.model_tag().to_string();
        let dim = table.dim();
        EmbeddingStore {
            provider: EmbeddingProvider::Local(table),
            model_tag: tag,
            dim: Mutex::new(Some(dim)),
            cells: Mutex::new(HashMap::new()),
            fetches: Default::default(),
        }
    }

    pub fn remote(client: RemoteEmbeddings) -> EmbeddingStore {
        EmbeddingStore {
            model_tag: client.model().to_string(),
            provider: EmbeddingProvider::Remote(client),
            dim: Mutex::new(None),
            cells: Mutex::new(HashMap::new()),
            fetches: Default::default(),
        }
    }

    /// Seeds the cache, e.g. with a previously saved file. Fails when the
    /// file belongs to another embedding model.
    pub fn preload(&self, table: &EmbeddingTable) -> Result<(), EmbedError> {
        if table.model_tag() != self.model_tag {
            return Err(EmbedError::ModelMismatch {
                expected: self.model_tag.clone(),
                found: table.model_tag().to_string(),
            });
        }
        self.check_dim(table.dim())?;
        let mut cells = self.cells.lock().unwrap();
        for (w, v) in table.iter() {
            cells
                .entry(w.to_string())
                .or_insert_with(|| Arc::new(OnceCell::new_with(Some(v.clone()))));
        }
        Ok(())
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    /// Provider calls made so far (local lookups included).
    pub fn fetch_count(&self) -> usize {
        self.fetches.load(std::sync::atomic::Ordering::SeqCst)
    }

    fn check_dim(&self, found: usize) -> Result<(), EmbedError> {
        let mut dim = self.dim.lock().unwrap();
        match *dim {
            Some(expected) if expected != found => {
                Err(EmbeddingError::DimensionMismatch { expected, found }.into())
            }
            _ => {
                *dim = Some(found);
                Ok(())
            }
        }
    }

    fn cell(&self, word: &str) -> Arc<OnceCell<Embedding>> {
        self.cells
            .lock()
            .unwrap()
            .entry(word.to_string())
            .or_default()
            .clone()
    }

    pub async fn embed(&self, word: &Word) -> Result<Embedding, EmbedError> {
        let key = word.as_str();
        let cell = self.cell(key);
        let v = cell
            .get_or_try_init(|| async {
                self.fetches.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let v = match &self.provider {
                    EmbeddingProvider::Local(table) => table
                        .embedding(key)
                        .cloned()
                        .ok_or_else(|| EmbedError::UnknownWord(key.to_string()))?,
                    EmbeddingProvider::Remote(client) => {
                        let mut got = client.fetch(&[key]).await?;
                        Embedding::new(got.pop().unwrap_or_default())?
                    }
                };
                self.check_dim(v.dim())?;
                Ok::<_, EmbedError>(v)
            })
            .await?;
        Ok(v.clone())
    }

    /// Embeds every word, batching remote requests for the ones not cached.
    pub async fn embed_all<'a>(
        &self,
        words: impl IntoIterator<Item = &'a Word>,
    ) -> Result<EmbeddingTable, EmbedError> {
        let mut unique: Vec<&Word> = words.into_iter().collect();
        unique.sort();
        unique.dedup();
        if let EmbeddingProvider::Remote(client) = &self.provider {
            let missing: Vec<&str> = unique
                .iter()
                .map(|w| w.as_str())
                .filter(|w| self.cell(w).get().is_none())
                .collect();
            for batch in missing.chunks(256) {
                self.fetches.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let vectors = client.fetch(batch).await?;
                for (w, v) in batch.iter().zip(vectors) {
                    let v = Embedding::new(v)?;
                    self.check_dim(v.dim())?;
                    // a concurrent single-word fetch may have won; keep it
                    let _ = self.cell(w).set(v);
                }
            }
        }
        for w in &unique {
            self.embed(w).await?;
        }
        let mut table = self.snapshot();
        table = restrict(&table, unique.iter().map(|w| w.as_str()));
        Ok(table)
    }

    /// Every cached vector.
    pub fn snapshot(&self) -> EmbeddingTable {
        let dim = self.dim.lock().unwrap().unwrap_or(0);
        let mut table = EmbeddingTable::new(&self.model_tag, dim);
        let cells = self.cells.lock().unwrap();
        for (w, cell) in cells.iter() {
            if let Some(v) = cell.get() {
                table.insert(w, v.clone()).expect("dimension checked on insert");
            }
        }
        table
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        write_embedding_file(path, &self.snapshot())
    }
}

fn restrict<'a>(table: &EmbeddingTable, words: impl Iterator<Item = &'a str>) -> EmbeddingTable {
    let mut out = EmbeddingTable::new(table.model_tag(), table.dim());
    for w in words {
        if let Some(v) = table.embedding(w) {
            out.insert(w, v.clone()).expect("same dimension");
        }
    }
    out
}
