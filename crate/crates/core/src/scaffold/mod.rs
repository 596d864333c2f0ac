//! Optional scaffolds and end-of-quest styling: the helper catalog, helper
//! requests, the SVG sanitizer and the offline style filters.

pub mod sanitize;
mod style;
pub mod vector;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canvas::{CanvasError, HelperObject, Point};
use crate::domain::{Session, SessionPhase};
use crate::provider::{Provider, ProviderError};
use crate::quest::normalize_label;
use crate::text::{is_label, label_words, words};

pub use sanitize::{sanitize_svg, Rejection};
pub use style::{apply_style, median_cut, stylize, Palette, STYLE_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleKind {
    OilPainting,
    Watercolor,
    Anime,
}

impl StyleKind {
    pub const ALL: [StyleKind; 3] = [StyleKind::OilPainting, StyleKind::Watercolor, StyleKind::Anime];

    pub fn name(self) -> &'static str {
        match self {
            StyleKind::OilPainting => "oil_painting",
            StyleKind::Watercolor => "watercolor",
            StyleKind::Anime => "anime",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for StyleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ScaffoldError {
    #[error("not available in phase {0:?}")]
    PhaseViolation(SessionPhase),
    #[error("no helper matches `{0}`")]
    NoSuchHelper(String),
    #[error("helper markup rejected: {0}")]
    UnsafeMarkup(Rejection),
    #[error(transparent)]
    ProviderFailure(#[from] ProviderError),
    #[error(transparent)]
    Canvas(#[from] CanvasError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelperCatalogEntry {
    pub label: String,
    /// Sanitized markup.
    pub svg_body: String,
    pub default_scale: f64,
    pub topic_keywords: Vec<String>,
}

/// Helper markup proposed by a provider, not yet sanitized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelperDraft {
    pub label: String,
    pub svg_body: String,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelperCatalog {
    pub version: String,
    pub entries: Vec<HelperCatalogEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndex {
    version: String,
    helpers: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    label: String,
    file: String,
    default_scale: f64,
    topic_keywords: Vec<String>,
}

macro_rules! shipped_helpers {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../assets/helpers/", $name)))),*]
    };
}

const SHIPPED_INDEX: &str = include_str!("../../assets/helpers/index.toml");
const SHIPPED_FILES: &[(&str, &str)] = shipped_helpers![
    "sun.svg", "leaf.svg", "water.svg", "carbon-dioxide.svg", "chloroplast.svg", "glucose.svg",
    "oxygen.svg", "mitochondrion.svg", "arrow.svg", "roots.svg", "ocean.svg", "vapor.svg",
    "cloud.svg", "rain.svg", "river.svg", "mountain.svg", "snow.svg", "groundwater.svg",
    "membrane.svg", "nucleus.svg", "ribosome.svg", "endoplasmic-reticulum.svg", "golgi.svg",
    "vacuole.svg", "cell-wall.svg",
];

impl Default for HelperCatalog {
    fn default() -> Self {
        HelperCatalog::from_index(SHIPPED_INDEX, |file| {
            SHIPPED_FILES
                .iter()
                .find(|(name, _)| *name == file)
                .map(|(_, body)| body.to_string())
                .ok_or_else(|| format!("missing {file}"))
        })
        .expect("shipped helper catalog is valid")
    }
}

impl HelperCatalog {
    /// Loads `index.toml` and the SVG files it names from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, String> {
        let index = std::fs::read_to_string(dir.join("index.toml"))
            .map_err(|e| format!("{}: {e}", dir.join("index.toml").display()))?;
        HelperCatalog::from_index(&index, |file| {
            std::fs::read_to_string(dir.join(file)).map_err(|e| format!("{file}: {e}"))
        })
    }

    /// Parses an index and reads each entry's markup through `read`. Every
    /// file must pass the sanitizer; the stored body is its canonical form.
    pub fn from_index(
        index: &str,
        read: impl Fn(&str) -> Result<String, String>,
    ) -> Result<Self, String> {
        let raw: RawIndex = toml::from_str(index).map_err(|e| e.to_string())?;
        let mut labels = BTreeSet::new();
        let mut entries = Vec::new();
        for e in raw.helpers {
            if !is_label(&e.label) || !labels.insert(e.label.clone()) {
                return Err(format!("bad or duplicate label `{}`", e.label));
            }
            if !(e.default_scale > 0.0 && e.default_scale <= 10.0) {
                return Err(format!("`{}`: default_scale out of range", e.label));
            }
            if let Some(k) = e.topic_keywords.iter().find(|k| words(k) != [k.as_str()]) {
                return Err(format!("`{}`: keyword `{k}` is not one lowercase word", e.label));
            }
            let markup = read(&e.file)?;
            let svg_body = sanitize_svg(&markup).map_err(|r| format!("{}: {r}", e.file))?;
            entries.push(HelperCatalogEntry {
                label: e.label,
                svg_body,
                default_scale: e.default_scale,
                topic_keywords: e.topic_keywords,
            });
        }
        Ok(HelperCatalog { version: raw.version, entries })
    }

    pub fn entry(&self, label: &str) -> Option<&HelperCatalogEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Entries sharing a keyword with `keywords`.
    pub fn for_topic<'a>(&'a self, keywords: &'a [String]) -> impl Iterator<Item = &'a HelperCatalogEntry> {
        self.entries
            .iter()
            .filter(move |e| e.topic_keywords.iter().any(|k| keywords.contains(k)))
    }

    /// Offline resolution of a learner hint.
    ///
    /// An exact label match wins. Otherwise each entry scores
    /// (hint words among its label words and keywords, goal words among its
    /// keywords), compared lexicographically; ties go to the smallest label.
    /// A hint sharing no word with any entry resolves to nothing.
    pub fn resolve(&self, hint: &str, goal: Option<&str>) -> Option<&HelperCatalogEntry> {
        if let Some(entry) = normalize_label(hint).and_then(|l| self.entry(&l)) {
            return Some(entry);
        }
        let hint_words: BTreeSet<String> = words(hint).into_iter().collect();
        let goal_words: BTreeSet<String> = goal.map(words).unwrap_or_default().into_iter().collect();
        self.entries
            .iter()
            .map(|e| {
                let keys: BTreeSet<String> =
                    label_words(&e.label).into_iter().chain(e.topic_keywords.iter().cloned()).collect();
                let hint_score = keys.intersection(&hint_words).count();
                let goal_score = e.topic_keywords.iter().filter(|k| goal_words.contains(*k)).count();
                ((hint_score, goal_score), e)
            })
            .filter(|((hint_score, _), _)| *hint_score > 0)
            .min_by(|(sa, a), (sb, b)| sb.cmp(sa).then_with(|| a.label.cmp(&b.label)))
            .map(|(_, e)| e)
    }
}

/// Produces a helper for `hint` without placing it. `request_no` makes the
/// helper id unique within the session.
pub fn request_helper(
    session: &Session,
    hint: &str,
    provider: &dyn Provider,
    request_no: u64,
) -> Result<HelperObject, ScaffoldError> {
    if session.phase != SessionPhase::QuestActive {
        return Err(ScaffoldError::PhaseViolation(session.phase));
    }
    let draft = provider
        .draft_helper(hint, session.goal.as_deref())?
        .ok_or_else(|| ScaffoldError::NoSuchHelper(hint.to_owned()))?;
    let svg_body = sanitize_svg(&draft.svg_body).map_err(ScaffoldError::UnsafeMarkup)?;
    let label = normalize_label(&draft.label)
        .or_else(|| normalize_label(hint))
        .unwrap_or_else(|| "helper".to_owned());
    let helper = HelperObject {
        helper_id: format!("h{request_no}-{label}"),
        label,
        svg_body,
        position: Point::new(0.5, 0.5),
        scale: if draft.scale > 0.0 && draft.scale <= 10.0 { draft.scale } else { 1.0 },
    };
    helper.validate()?;
    Ok(helper)
}
