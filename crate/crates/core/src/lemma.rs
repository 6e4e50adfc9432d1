//! Identifiers shared by every stage: lemmas and time slices.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LemmaError {
    #[error("lemma is empty")]
    Empty,
    #[error("lemma {0:?} contains whitespace")]
    Whitespace(String),
    #[error("lemma {0:?} is not lowercase")]
    NotLowercase(String),
}

/// A normalized word form: non-empty, lowercase, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lemma(String);

impl Lemma {
    pub fn new(text: impl Into<String>) -> Result<Self, LemmaError> {
        let text = text.into();
        if text.is_empty() {
            return Err(LemmaError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(LemmaError::Whitespace(text));
        }
        if text.to_lowercase() != text {
            return Err(LemmaError::NotLowercase(text));
        }
        Ok(Lemma(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Lemma {
    type Error = LemmaError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Lemma::new(value)
    }
}

impl TryFrom<&str> for Lemma {
    type Error = LemmaError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Lemma::new(value)
    }
}

impl std::str::FromStr for Lemma {
    type Err = LemmaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lemma::new(s)
    }
}

impl From<Lemma> for String {
    fn from(value: Lemma) -> Self {
        value.0
    }
}

impl AsRef<str> for Lemma {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shorthand for building lemmas from literals in tests and fixtures.
///
/// Panics on invalid input.
pub fn lemma(text: &str) -> Lemma {
    Lemma::new(text).unwrap_or_else(|e| panic!("invalid lemma literal: {e}"))
}

/// A time slice: its position in the chronology plus a display label.
///
/// Ordering follows the ordinal, so collections keyed by `SliceId` iterate
/// chronologically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SliceId {
    pub ordinal: u32,
    pub label: String,
}

impl SliceId {
    pub fn new(ordinal: u32, label: impl Into<String>) -> Self {
        SliceId {
            ordinal,
            label: label.into(),
        }
    }

    /// Assigns dense ordinals to labels given in chronological order.
    pub fn chronology<S: AsRef<str>>(labels: &[S]) -> Vec<SliceId> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| SliceId::new(i as u32, l.as_ref()))
            .collect()
    }
}

impl fmt::Display for SliceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}
