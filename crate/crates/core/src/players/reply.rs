use alloc::string::{String, ToString};
use core::fmt;

use crate::word::{normalize_word, Word};

const WRAPPERS: &[char] = &[
    '"', '\'', '`', '*', '_', '~', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}',
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnparseableReply(pub String);

impl fmt::Display for UnparseableReply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "reply is not a single word: {:?}", self.0)
    }
}

impl core::error::Error for UnparseableReply {}

/// Extracts the word from a raw completion: strips whitespace, quotes and
/// markdown emphasis, and accepts trailing tokens only when they are pure
/// punctuation.
pub fn parse_word_reply(raw_completion: &str) -> Result<Word, UnparseableReply> {
    let fail = || UnparseableReply(raw_completion.to_string());
    let body = raw_completion.trim().trim_matches(WRAPPERS).trim();
    let mut tokens = body.split_whitespace();
    let first = tokens.next().ok_or_else(fail)?;
    let rest_is_punctuation = tokens.all(|t| {
        t.chars()
            .all(|c| c.is_ascii_punctuation() || WRAPPERS.contains(&c))
    });
    if !rest_is_punctuation {
        return Err(fail());
    }
    let first = first.trim_matches(WRAPPERS);
    normalize_word(first).map_err(|_| fail())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_quotes_and_newline() {
        assert_eq!(parse_word_reply("\"Sunshine\"\n").unwrap().as_str(), "sunshine");
    }

    #[test]
    fn trailing_period() {
        assert_eq!(parse_word_reply("Existence.").unwrap().as_str(), "existence");
    }

    #[test]
    fn sentence_is_rejected() {
        assert!(parse_word_reply("I choose apple").is_err());
    }

    #[test]
    fn markdown_and_detached_punctuation() {
        assert_eq!(parse_word_reply("**Ocean**").unwrap().as_str(), "ocean");
        assert_eq!(parse_word_reply("`river` .").unwrap().as_str(), "river");
        assert_eq!(parse_word_reply("  Forest !").unwrap().as_str(), "forest");
    }

    #[test]
    fn empty_reply_is_rejected() {
        assert!(parse_word_reply("").is_err());
        assert!(parse_word_reply(" \"\" ").is_err());
    }
}
