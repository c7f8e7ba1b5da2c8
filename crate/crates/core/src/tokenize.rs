//! Tokenization into [`TokenSeq`], the unit every alignment and metric
//! routine consumes.
//!
//! The default tokenizer splits on Unicode whitespace and then peels trailing
//! punctuation off each word into single-character tokens, so `"school."`
//! becomes `["school", "."]`. Pre-tokenized corpora (M2 files, for example)
//! should use [`WhitespaceTokenizer`] so offsets line up with the gold data.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A tokenized piece of text together with the string it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub raw: String,
}

impl TokenSeq {
    /// Builds a sequence from already-split tokens. `raw` is the space-joined
    /// normalized form.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let raw = tokens.join(" ");
        TokenSeq { tokens, raw }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn normalized(&self) -> String {
        self.tokens.join(" ")
    }

    /// Characters of the normalized form, used for character-granularity
    /// distances.
    pub fn chars(&self) -> Vec<char> {
        self.normalized().chars().collect()
    }

    pub fn lowercased(&self) -> TokenSeq {
        TokenSeq {
            tokens: self.tokens.iter().map(|t| t.to_lowercase()).collect(),
            raw: self.raw.clone(),
        }
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.normalized())
    }
}

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> TokenSeq;

    fn detokenize(&self, tokens: &[String]) -> String {
        tokens.join(" ")
    }
}

/// Whitespace split with trailing punctuation separated.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultTokenizer;

/// Plain Unicode-whitespace split.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for DefaultTokenizer {
    fn tokenize(&self, text: &str) -> TokenSeq {
        let mut tokens = Vec::new();
        for word in text.split_whitespace() {
            let chars: Vec<char> = word.chars().collect();
            let mut cut = chars.len();
            while cut > 0 && chars[cut - 1].is_ascii_punctuation() {
                cut -= 1;
            }
            // An all-punctuation word ("...", "--") stays one token.
            if cut == 0 {
                tokens.push(word.to_string());
                continue;
            }
            tokens.push(chars[..cut].iter().collect());
            tokens.extend(chars[cut..].iter().map(|c| c.to_string()));
        }
        TokenSeq {
            tokens,
            raw: text.to_string(),
        }
    }
}

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> TokenSeq {
        TokenSeq {
            tokens: text.split_whitespace().map(str::to_string).collect(),
            raw: text.to_string(),
        }
    }
}

/// Selects a tokenizer by name in configuration files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    #[default]
    Default,
    Whitespace,
}

impl TokenizerKind {
    pub fn tokenizer(self) -> &'static dyn Tokenizer {
        match self {
            TokenizerKind::Default => &DefaultTokenizer,
            TokenizerKind::Whitespace => &WhitespaceTokenizer,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            TokenizerKind::Default => "unicode-whitespace split, trailing ASCII punctuation split",
            TokenizerKind::Whitespace => "unicode-whitespace split",
        }
    }
}

pub fn tokenize(text: &str) -> TokenSeq {
    DefaultTokenizer.tokenize(text)
}
