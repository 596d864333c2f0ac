//! Per-dimension card templates with `{slot}` placeholders, loaded from a
//! versioned TOML table.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use super::framing::{FramingRules, FramingViolation};
use crate::domain::{FeedbackCard, FeedbackDimension, SessionPhase};

pub const DEFAULT_TABLE: &str = include_str!("../../assets/feedback.v1.toml");

/// Placeholder names a template may use.
pub const KNOWN_SLOTS: &[&str] = &["done", "total", "missing", "strategy", "milestone"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedbackError {
    #[error("template needs slot `{0}`")]
    MissingSlot(String),
    #[error("no {dimension} template for variant `{variant}`")]
    UnknownVariant { dimension: FeedbackDimension, variant: String },
    #[error("{dimension} card fails framing: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    FramingViolation { dimension: FeedbackDimension, violations: Vec<FramingViolation> },
    #[error("feedback cannot be composed in phase {0:?}")]
    NotComposable(SessionPhase),
    #[error("feedback table: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardTemplate {
    pub dimension: FeedbackDimension,
    pub variant: String,
    pub text: String,
}

impl CardTemplate {
    /// Placeholder names in order of appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut rest = self.text.as_str();
        while let Some(open) = rest.find('{') {
            let Some(close) = rest[open..].find('}') else { break };
            out.push(rest[open + 1..open + close].to_owned());
            rest = &rest[open + close + 1..];
        }
        out
    }

    pub fn render(&self, slots: &Slots) -> Result<String, FeedbackError> {
        let mut text = self.text.clone();
        for name in self.placeholders() {
            let value = slots.get(&name).ok_or_else(|| FeedbackError::MissingSlot(name.clone()))?;
            text = text.replace(&format!("{{{name}}}"), value);
        }
        Ok(text)
    }
}

/// Slot values keyed by placeholder name. The reserved key `variant`
/// selects the template within a dimension.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Slots(BTreeMap<String, String>);

impl Slots {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn variant(&self) -> Option<&str> {
        self.get("variant")
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTable {
    pub version: String,
    pub rules: FramingRules,
    pub strategies: BTreeMap<String, String>,
    pub templates: Vec<CardTemplate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    version: String,
    framing: RawFraming,
    #[serde(default)]
    strategies: BTreeMap<String, String>,
    templates: Vec<RawTemplate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFraming {
    version: String,
    forbidden: Vec<String>,
    collaborative: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    dimension: String,
    variant: String,
    text: String,
}

impl Default for FeedbackTable {
    fn default() -> Self {
        FeedbackTable::from_toml(DEFAULT_TABLE).expect("shipped feedback table is valid")
    }
}

impl FeedbackTable {
    pub fn from_toml(text: &str) -> Result<Self, FeedbackError> {
        let raw: RawTable = toml::from_str(text).map_err(|e| FeedbackError::Config(e.to_string()))?;
        let mut templates = Vec::new();
        for t in raw.templates {
            let dimension = FeedbackDimension::from_name(&t.dimension).ok_or_else(|| {
                FeedbackError::Config(format!("unknown dimension `{}`", t.dimension))
            })?;
            templates.push(CardTemplate { dimension, variant: t.variant, text: t.text });
        }
        let table = FeedbackTable {
            version: raw.version,
            rules: FramingRules {
                version: raw.framing.version,
                forbidden_patterns: raw.framing.forbidden,
                collaborative_markers: raw.framing.collaborative,
            },
            strategies: raw.strategies,
            templates,
        };
        table.check().map_err(FeedbackError::Config)?;
        Ok(table)
    }

    /// Structural checks: rule lists non-empty, every dimension covered,
    /// variants unique, only known placeholders.
    pub fn check(&self) -> Result<(), String> {
        self.rules.check_invariants()?;
        for dimension in FeedbackDimension::ALL {
            if !self.templates.iter().any(|t| t.dimension == dimension) {
                return Err(format!("no template for {dimension}"));
            }
        }
        for (i, t) in self.templates.iter().enumerate() {
            if self.templates[..i]
                .iter()
                .any(|u| u.dimension == t.dimension && u.variant == t.variant)
            {
                return Err(format!("duplicate {} variant `{}`", t.dimension, t.variant));
            }
            if let Some(p) = t.placeholders().iter().find(|p| !KNOWN_SLOTS.contains(&p.as_str())) {
                return Err(format!("{} `{}` uses unknown slot `{p}`", t.dimension, t.variant));
            }
        }
        Ok(())
    }

    pub fn template(&self, dimension: FeedbackDimension, variant: Option<&str>) -> Option<&CardTemplate> {
        let mut of_dim = self.templates.iter().filter(|t| t.dimension == dimension);
        match variant {
            Some(v) => of_dim.find(|t| t.variant == v),
            None => of_dim.next(),
        }
    }

    pub fn strategy(&self, key: &str) -> Option<&str> {
        self.strategies.get(key).map(String::as_str)
    }

    /// Renders the text of a card without framing validation.
    pub fn render_text(&self, dimension: FeedbackDimension, slots: &Slots) -> Result<String, FeedbackError> {
        let template = self.template(dimension, slots.variant()).ok_or_else(|| {
            FeedbackError::UnknownVariant {
                dimension,
                variant: slots.variant().unwrap_or_default().to_owned(),
            }
        })?;
        template.render(slots)
    }

    /// Dummy slots that satisfy every placeholder of `template`.
    pub fn sample_slots(&self, template: &CardTemplate) -> Slots {
        Slots::new()
            .with("variant", &template.variant)
            .with("done", 2)
            .with("total", 5)
            .with("missing", "nucleus")
            .with("strategy", self.strategy(&template.variant).unwrap_or("sketch the big shapes first"))
            .with("milestone", "Cell membrane")
    }
}

/// Renders a card from the fixed template table. The card's `seq` is 0
/// until the reducer stamps it.
pub fn render_card(
    table: &FeedbackTable,
    dimension: FeedbackDimension,
    slots: &Slots,
) -> Result<FeedbackCard, FeedbackError> {
    let text = table.render_text(dimension, slots)?;
    Ok(FeedbackCard {
        dimension,
        text,
        seq: 0,
        color_code: dimension.color_code().to_owned(),
    })
}

/// Element label as learner-facing words: `cell-wall` → `cell wall`.
pub fn display_label(label: &str) -> String {
    label.replace(['-', '_'], " ")
}
