//! Embedding vectors, Euclidean distance and mean embeddings, plus the
//! in-memory word table used by agents and analyses.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    DimensionMismatch { expected: usize, found: usize },
    EmptyInput,
    NonFinite,
    UnknownWord(String),
}

impl fmt::Display for EmbeddingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            EmbeddingError::EmptyInput => f.write_str("no vectors given"),
            EmbeddingError::NonFinite => f.write_str("embedding contains a non-finite value"),
            EmbeddingError::UnknownWord(w) => write!(f, "no embedding for word {w:?}"),
        }
    }
}

impl core::error::Error for EmbeddingError {}

/// A non-empty vector of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Embedding, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// `sqrt(sum((u_i - v_i)^2))`.
pub fn euclidean_distance(u: &Embedding, v: &Embedding) -> Result<f64, EmbeddingError> {
    if u.dim() != v.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(libm::sqrt(squared_distance(u.values(), v.values())))
}

pub(crate) fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Component-wise arithmetic mean, accumulated as a running mean so that
/// the mean of identical vectors is that vector exactly.
pub fn mean_embedding<'a, I>(vectors: I) -> Result<Embedding, EmbeddingError>
where
    I: IntoIterator<Item = &'a Embedding>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(EmbeddingError::EmptyInput)?;
    let mut mean = first.values().to_vec();
    let mut count = 1usize;
    for v in iter {
        if v.dim() != mean.len() {
            return Err(EmbeddingError::DimensionMismatch {
                expected: mean.len(),
                found: v.dim(),
            });
        }
        count += 1;
        let n = count as f64;
        for (m, x) in mean.iter_mut().zip(v.values()) {
            *m += (x - *m) / n;
        }
    }
    Ok(Embedding(mean))
}

/// Read access to word embeddings, keyed by normalized word text.
pub trait EmbeddingSource {
    fn embedding(&self, word: &str) -> Option<&Embedding>;

    fn require(&self, word: &str) -> Result<&Embedding, EmbeddingError> {
        self.embedding(word)
            .ok_or_else(|| EmbeddingError::UnknownWord(word.to_string()))
    }
}

/// Word to vector map with a single dimension and the tag of the model that
/// produced the vectors. Iteration is in lexicographic word order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    model_tag: String,
    dim: usize,
    entries: BTreeMap<String, Embedding>,
}

impl EmbeddingTable {
    pub fn new(model_tag: &str, dim: usize) -> EmbeddingTable {
        EmbeddingTable {
            model_tag: model_tag.to_string(),
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    /// Inserts a vector. An existing entry is kept as is.
    pub fn insert(&mut self, word: &str, vector: Embedding) -> Result<(), EmbeddingError> {
        if vector.dim() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                found: vector.dim(),
            });
        }
        self.entries.entry(word.to_string()).or_insert(vector);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Embedding)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> EmbeddingTable {
        EmbeddingTable {
            model_tag: self.model_tag.clone(),
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), Embedding(v.0.iter().map(|x| x * factor).collect())))
                .collect(),
        }
    }

    /// `n` pseudo-words with coordinates drawn uniformly from `[0, 1)^dim`.
    /// Identical arguments always give an identical table.
    pub fn synthetic(n: usize, dim: usize, seed: u64) -> EmbeddingTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = EmbeddingTable::new(&alloc::format!("synthetic-{dim}d-{seed}"), dim);
        for i in 0..n {
            let values = (0..dim).map(|_| rng.random::<f64>()).collect();
            table.entries.insert(synthetic_word(i), Embedding(values));
        }
        table
    }
}

impl EmbeddingSource for EmbeddingTable {
    fn embedding(&self, word: &str) -> Option<&Embedding> {
        self.entries.get(word)
    }
}

const SYLLABLES: [&str; 24] = [
    "ba", "ko", "ri", "mu", "te", "sa", "lo", "ne", "di", "fu", "ga", "hi", "ja", "ke", "li",
    "mo", "nu", "pa", "ro", "si", "to", "vu", "we", "zo",
];

/// Distinct pronounceable token for index `i`.
fn synthetic_word(mut i: usize) -> String {
    let mut word = String::new();
    for _ in 0..3 {
        word.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
    }
    while i > 0 {
        word.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
    }
    word
}
