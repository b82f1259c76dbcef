//! Word tokens and their normalized form.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Characters dropped from the end of a word.
const TRAILING_PUNCTUATION: &[char] = &[
    '.', ',', ';', ':', '!', '?', '"', '\'', '\u{201d}', '\u{2019}',
];

/// Characters dropped from the start of a word.
const LEADING_QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{2018}'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordError {
    EmptyWord,
    MultiWord(String),
}

impl fmt::Display for WordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordError::EmptyWord => f.write_str("word is empty after trimming"),
            WordError::MultiWord(w) => write!(f, "expected a single word, got {w:?}"),
        }
    }
}

impl core::error::Error for WordError {}

/// A word as produced by a player, together with the form used for comparison.
///
/// Equality, ordering and hashing only look at the normalized form, so
/// `"Banana."` and `"banana"` are the same word. Serialized as the
/// normalized text only.
#[derive(Debug, Clone)]
pub struct Word {
    raw: String,
    normalized: String,
}

impl Word {
    pub fn parse(raw: &str) -> Result<Word, WordError> {
        normalize_word(raw)
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn as_str(&self) -> &str {
        &self.normalized
    }

    /// Builds a word from text that is already normalized (for example read
    /// back from a game log). The text still goes through normalization, so
    /// the invariants hold either way.
    pub fn from_normalized(text: &str) -> Result<Word, WordError> {
        let mut w = normalize_word(text)?;
        w.raw = w.normalized.clone();
        Ok(w)
    }
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.normalized == other.normalized
    }
}

impl Eq for Word {}

impl Hash for Word {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized.hash(state);
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.normalized.cmp(&other.normalized)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.normalized)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Word::from_normalized(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.normalized)
    }
}

/// Lowercases, trims and strips trailing punctuation (and leading quotes)
/// until nothing more can be removed, then rejects multi-token input.
pub fn normalize_word(raw: &str) -> Result<Word, WordError> {
    let mut s = raw.trim();
    loop {
        let next = s
            .trim_end_matches(TRAILING_PUNCTUATION)
            .trim_start_matches(LEADING_QUOTES)
            .trim();
        if next.len() == s.len() {
            break;
        }
        s = next;
    }
    if s.is_empty() {
        return Err(WordError::EmptyWord);
    }
    if s.chars().any(char::is_whitespace) {
        return Err(WordError::MultiWord(s.to_string()));
    }
    Ok(Word {
        raw: raw.to_string(),
        normalized: s.to_lowercase(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_folding() {
        assert_eq!(normalize_word("Banana").unwrap().as_str(), "banana");
    }

    #[test]
    fn trims_and_strips_trailing_period() {
        let w = normalize_word("  Existence. ").unwrap();
        assert_eq!(w.as_str(), "existence");
        assert_eq!(w.raw(), "  Existence. ");
    }

    #[test]
    fn interior_whitespace_is_multiword() {
        assert!(matches!(
            normalize_word("ice cream"),
            Err(WordError::MultiWord(_))
        ));
    }

    #[test]
    fn empty_input() {
        assert_eq!(normalize_word("   ").unwrap_err(), WordError::EmptyWord);
        assert_eq!(normalize_word(" . ").unwrap_err(), WordError::EmptyWord);
    }

    #[test]
    fn equality_ignores_raw_form() {
        assert_eq!(Word::parse("Cloud.").unwrap(), Word::parse("cloud").unwrap());
    }

    #[test]
    fn hyphenated_words_are_single_tokens() {
        assert_eq!(normalize_word("Ice-Cream!").unwrap().as_str(), "ice-cream");
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "[ \\t]{0,2}[\"']?[A-Za-z\u{e9}-]{1,12}[.,!?\"']{0,3}[ ]{0,2}") {
            if let Ok(w) = normalize_word(&raw) {
                let again = normalize_word(w.as_str()).unwrap();
                prop_assert_eq!(again.as_str(), w.as_str());
                prop_assert!(!w.as_str().is_empty());
                prop_assert!(!w.as_str().chars().any(char::is_whitespace));
            }
        }
    }
}
