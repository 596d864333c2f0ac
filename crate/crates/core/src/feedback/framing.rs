//! Collaborative-framing rules: forbidden controlling or judging phrases,
//! and the collaborative markers a cognitive suggestion must carry.
//!
//! Matching is case-insensitive on whole words. A word is a run of
//! alphanumerics; an apostrophe between two alphanumerics stays inside the
//! word (`let's`).

use serde::{Deserialize, Serialize};

use crate::domain::FeedbackDimension;

pub const DEFAULT_FORBIDDEN: &[&str] = &[
    "you should",
    "you must",
    "you have to",
    "you need to",
    "wrong",
    "incorrect",
    "failed",
    "bad",
];

pub const DEFAULT_COLLABORATIVE: &[&str] = &["we could", "we might", "let's", "what if", "maybe we"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramingRules {
    pub version: String,
    pub forbidden_patterns: Vec<String>,
    pub collaborative_markers: Vec<String>,
}

impl Default for FramingRules {
    fn default() -> Self {
        FramingRules {
            version: "framing-v1".into(),
            forbidden_patterns: DEFAULT_FORBIDDEN.iter().map(|s| s.to_string()).collect(),
            collaborative_markers: DEFAULT_COLLABORATIVE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "pattern", rename_all = "snake_case")]
pub enum FramingViolation {
    ForbiddenPattern(String),
    MissingCollaborativeMarker,
}

impl std::fmt::Display for FramingViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FramingViolation::ForbiddenPattern(p) => write!(f, "forbidden pattern \"{p}\""),
            FramingViolation::MissingCollaborativeMarker => f.write_str("no collaborative marker"),
        }
    }
}

impl FramingRules {
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.forbidden_patterns.is_empty() {
            return Err("forbidden pattern list is empty".into());
        }
        if self.collaborative_markers.is_empty() {
            return Err("collaborative marker list is empty".into());
        }
        let blank = self
            .forbidden_patterns
            .iter()
            .chain(&self.collaborative_markers)
            .find(|p| tokenize(p).is_empty());
        if let Some(p) = blank {
            return Err(format!("pattern `{p}` has no words"));
        }
        Ok(())
    }

    /// Forbidden-pattern check for any text.
    pub fn validate(&self, text: &str) -> Result<(), Vec<FramingViolation>> {
        let words = tokenize(text);
        let violations: Vec<_> = self
            .forbidden_patterns
            .iter()
            .filter(|p| contains_phrase(&words, &tokenize(p)))
            .map(|p| FramingViolation::ForbiddenPattern(p.clone()))
            .collect();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Full check for a card of `dimension`; cognitive texts must also carry
    /// a collaborative marker.
    pub fn validate_for(
        &self,
        dimension: FeedbackDimension,
        text: &str,
    ) -> Result<(), Vec<FramingViolation>> {
        let mut violations = self.validate(text).err().unwrap_or_default();
        if dimension == FeedbackDimension::Cognitive && !self.has_marker(text) {
            violations.push(FramingViolation::MissingCollaborativeMarker);
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    pub fn has_marker(&self, text: &str) -> bool {
        let words = tokenize(text);
        self.collaborative_markers.iter().any(|m| contains_phrase(&words, &tokenize(m)))
    }
}

/// Validates `text` as a card of `dimension`, or as generic text when no
/// dimension is given.
pub fn validate_framing(
    text: &str,
    dimension: Option<FeedbackDimension>,
    rules: &FramingRules,
) -> Result<(), Vec<FramingViolation>> {
    match dimension {
        Some(d) => rules.validate_for(d, text),
        None => rules.validate(text),
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().map(|c| if c == '\u{2019}' { '\'' } else { c }).collect();
    let mut words = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe = c == '\''
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

fn contains_phrase(words: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && words.windows(phrase.len()).any(|w| w == phrase)
}
