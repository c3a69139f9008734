//! Sentences, BIO tag sequences, entity spans and the corpus file format.
//!
//! The on-disk format is one token per line with a tab between the token
//! and its tag, blank lines between sentences, and `#` header lines that
//! precede the tokens of a sentence:
//!
//! ```text
//! # id s1
//! # lang en
//! # noisy
//! Paris	B-HumanSettlement
//! is	O
//! ```
//!
//! `# lang` defaults to `en` and `# noisy` is optional.

mod bio;
mod format;
mod taxonomy;

pub use bio::{
    bio_from_spans, collapse_to_boundary, repair_bio, spans_from_bio, validate_bio, BioViolation,
    ViolationKind,
};
pub use format::{format_corpus, parse_corpus, ParseOptions};
pub use taxonomy::{Taxonomy, TaxonomyError};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Type name used for every entity in the boundary alphabet.
pub const BOUNDARY_TYPE: &str = "ENTITY";

/// Opening markup placed before a marked mention.
pub const OPEN_MARK: &str = "<e>";
/// Closing markup placed after a marked mention.
pub const CLOSE_MARK: &str = "</e>";

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{tag} at line {line} follows {after}")]
    Bio {
        line: usize,
        tag: String,
        after: String,
    },
    #[error("line {line}: label {label:?} is not in the taxonomy")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: duplicate sentence id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("sentence {id:?} has {tokens} tokens but {tags} tags")]
    LengthMismatch {
        id: String,
        tokens: usize,
        tags: usize,
    },
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("sentence {0:?} has no tokens")]
    EmptySentence(String),
    #[error("span {start}..{end} is out of range for a sentence of {len} tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("spans {0:?} and {1:?} overlap")]
    Overlap((usize, usize), (usize, usize)),
    #[error("invalid tag {0:?}")]
    InvalidTag(String),
}

/// One BIO tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Tag {
    O,
    B(String),
    I(String),
}

impl Tag {
    pub fn label(&self) -> Option<&str> {
        match self {
            Tag::O => None,
            Tag::B(l) | Tag::I(l) => Some(l),
        }
    }

    pub fn is_inside(&self) -> bool {
        matches!(self, Tag::I(_))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(l) => write!(f, "B-{l}"),
            Tag::I(l) => write!(f, "I-{l}"),
        }
    }
}

impl FromStr for Tag {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::O);
        }
        match s.split_at_checked(2) {
            Some(("B-", l)) if !l.is_empty() => Ok(Tag::B(l.to_string())),
            Some(("I-", l)) if !l.is_empty() => Ok(Tag::I(l.to_string())),
            _ => Err(CorpusError::InvalidTag(s.to_string())),
        }
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for Tag {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Per-token tags; one entry per token of the owning sentence.
pub type TagSequence = Vec<Tag>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub language: String,
    pub noisy: bool,
}

impl Sentence {
    /// Builds an English, clean sentence from its words.
    pub fn new<I, S>(id: impl Into<String>, words: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id = id.into();
        let mut tokens = Vec::new();
        for (index, w) in words.into_iter().enumerate() {
            let text = w.into();
            if text.is_empty() || text.chars().any(char::is_whitespace) {
                return Err(CorpusError::InvalidToken(text));
            }
            tokens.push(Token { text, index });
        }
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence(id));
        }
        Ok(Sentence {
            id,
            tokens,
            language: "en".to_string(),
            noisy: false,
        })
    }

    /// Splits `text` on whitespace.
    pub fn from_text(id: impl Into<String>, text: &str) -> Result<Self, CorpusError> {
        Sentence::new(id, text.split_whitespace())
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }

    pub fn with_noisy(mut self, noisy: bool) -> Self {
        self.noisy = noisy;
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    pub fn text(&self) -> String {
        self.words().collect::<Vec<_>>().join(" ")
    }

    pub fn span_text(&self, span: &EntitySpan) -> String {
        self.tokens[span.start..span.end]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The sentence with `span` wrapped in `<e>` ... `</e>`.
    pub fn marked_text(&self, span: &EntitySpan) -> String {
        let mut parts = Vec::with_capacity(self.len() + 2);
        for (i, tok) in self.tokens.iter().enumerate() {
            if i == span.start {
                parts.push(OPEN_MARK);
            }
            parts.push(tok.text.as_str());
            if i + 1 == span.end {
                parts.push(CLOSE_MARK);
            }
        }
        parts.join(" ")
    }
}

/// A half-open token range `[start, end)` with an optional fine label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            label: Some(label.into()),
        }
    }

    pub fn unlabeled(start: usize, end: usize) -> Self {
        EntitySpan {
            start,
            end,
            label: None,
        }
    }

    pub fn bounds(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn check(&self, len: usize) -> Result<(), CorpusError> {
        if self.start < self.end && self.end <= len {
            Ok(())
        } else {
            Err(CorpusError::SpanOutOfRange {
                start: self.start,
                end: self.end,
                len,
            })
        }
    }
}

/// A sentence paired with its tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub sentence: Sentence,
    pub tags: TagSequence,
}

impl Example {
    pub fn new(sentence: Sentence, tags: TagSequence) -> Result<Self, CorpusError> {
        if sentence.len() != tags.len() {
            return Err(CorpusError::LengthMismatch {
                id: sentence.id.clone(),
                tokens: sentence.len(),
                tags: tags.len(),
            });
        }
        Ok(Example { sentence, tags })
    }

    pub fn spans(&self) -> Vec<EntitySpan> {
        spans_from_bio(&self.tags)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Self {
        Dataset { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    /// Same sentences with every fine type replaced by `ENTITY`.
    pub fn to_boundary(&self) -> Dataset {
        Dataset::new(
            self.examples
                .iter()
                .map(|ex| Example {
                    sentence: ex.sentence.clone(),
                    tags: collapse_to_boundary(&ex.tags),
                })
                .collect(),
        )
    }

    /// Splits into (clean, noisy) partitions, preserving order.
    pub fn partition_noisy(&self) -> (Dataset, Dataset) {
        let (noisy, clean): (Vec<_>, Vec<_>) =
            self.examples.iter().cloned().partition(|ex| ex.sentence.noisy);
        (Dataset::new(clean), Dataset::new(noisy))
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;
    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}
