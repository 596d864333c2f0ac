//! Goal → quest: template matching, draft validation and repair.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{BloomLevel, Quest, QuestTask, RequiredElement, TaskStatus};
use crate::provider::{Provider, ProviderError};
use crate::text::{content_hash, is_label, words};

pub const DEFAULT_LIBRARY: &str = include_str!("../assets/quests.v1.toml");
pub const MIN_TASKS: usize = 3;
pub const MAX_TASKS: usize = 7;
pub const GENERIC_TEMPLATE: &str = "generic";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionDraft {
    pub label: String,
    pub min_count: i64,
}

/// One task as a provider proposed it. Numbers are kept wide so that
/// out-of-range values survive parsing and can be reported or repaired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDraft {
    pub title: String,
    pub prompt: String,
    pub bloom: i64,
    #[serde(default)]
    pub criteria: Vec<CriterionDraft>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestDraft {
    pub goal_text: String,
    pub tasks: Vec<TaskDraft>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestRequest {
    pub goal_text: String,
    pub desired_length: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    /// 3..=7 tasks.
    Length,
    /// Every ordinal in 1..=6.
    BloomRange,
    NonDecreasingBloom,
    /// First task ordinal ≤ 2.
    FirstBloom,
    /// Last task ordinal ≥ 4.
    LastBloom,
    /// Labels of the form `[a-z][a-z0-9_-]*`.
    CriterionLabel,
    /// min_count ≥ 1.
    CriterionCount,
    UniqueCriteria,
    /// Task indices 0, 1, 2, ... and distinct non-empty task ids.
    TaskIndex,
}

impl Invariant {
    pub fn description(self) -> &'static str {
        match self {
            Invariant::Length => "quest length 3..7",
            Invariant::BloomRange => "Bloom ordinal 1..6",
            Invariant::NonDecreasingBloom => "non-decreasing Bloom",
            Invariant::FirstBloom => "first Bloom at most 2",
            Invariant::LastBloom => "last Bloom at least 4",
            Invariant::CriterionLabel => "criterion label is a lowercase identifier",
            Invariant::CriterionCount => "criterion min_count at least 1",
            Invariant::UniqueCriteria => "criteria labels unique within a task",
            Invariant::TaskIndex => "contiguous task indices and unique ids",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestViolation {
    pub invariant: Invariant,
    /// Task index, absent for quest-level invariants.
    pub index: Option<usize>,
}

impl fmt::Display for QuestViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{} at index {i}", self.invariant.description()),
            None => f.write_str(self.invariant.description()),
        }
    }
}

#[derive(Debug, Error)]
pub enum QuestError {
    #[error("learning goal is empty")]
    EmptyGoal,
    #[error(transparent)]
    ProviderFailure(#[from] ProviderError),
    #[error("quest draft cannot be repaired: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    UnrepairableDraft(Vec<QuestViolation>),
}

/// Invariant checks over (bloom ordinal, criteria) rows in task order.
fn check_rows<'a>(rows: impl ExactSizeIterator<Item = (i64, &'a [(String, i64)])>) -> Vec<QuestViolation> {
    let mut out = Vec::new();
    let at = |invariant, index| QuestViolation { invariant, index: Some(index) };
    let n = rows.len();
    if !(MIN_TASKS..=MAX_TASKS).contains(&n) {
        out.push(QuestViolation { invariant: Invariant::Length, index: None });
    }
    let mut previous: Option<i64> = None;
    let mut first = None;
    let mut last = None;
    for (i, (bloom, criteria)) in rows.enumerate() {
        if !(1..=6).contains(&bloom) {
            out.push(at(Invariant::BloomRange, i));
        }
        if previous.is_some_and(|p| bloom < p) {
            out.push(at(Invariant::NonDecreasingBloom, i));
        }
        previous = Some(bloom);
        first.get_or_insert(bloom);
        last = Some(bloom);
        let mut seen = BTreeSet::new();
        for (label, count) in criteria {
            if !is_label(label) {
                out.push(at(Invariant::CriterionLabel, i));
            }
            if *count < 1 {
                out.push(at(Invariant::CriterionCount, i));
            }
            if !seen.insert(label.as_str()) {
                out.push(at(Invariant::UniqueCriteria, i));
            }
        }
    }
    if first.is_some_and(|b| b > 2) {
        out.push(at(Invariant::FirstBloom, 0));
    }
    if last.is_some_and(|b| b < 4) {
        out.push(at(Invariant::LastBloom, n - 1));
    }
    out.dedup();
    out
}

fn draft_rows(draft: &QuestDraft) -> Vec<(i64, Vec<(String, i64)>)> {
    draft
        .tasks
        .iter()
        .map(|t| (t.bloom, t.criteria.iter().map(|c| (c.label.clone(), c.min_count)).collect()))
        .collect()
}

/// Violations of a draft, in task order.
pub fn draft_violations(draft: &QuestDraft) -> Vec<QuestViolation> {
    let rows = draft_rows(draft);
    check_rows(rows.iter().map(|(b, c)| (*b, c.as_slice())))
}

/// Violations of a finished quest, including index and id bookkeeping.
pub fn quest_violations(quest: &Quest) -> Vec<QuestViolation> {
    let rows: Vec<(i64, Vec<(String, i64)>)> = quest
        .tasks
        .iter()
        .map(|t| {
            let criteria = t.criteria.iter().map(|c| (c.label.clone(), i64::from(c.min_count))).collect();
            (i64::from(t.bloom.ordinal()), criteria)
        })
        .collect();
    let mut out = check_rows(rows.iter().map(|(b, c)| (*b, c.as_slice())));
    let mut ids = BTreeSet::new();
    for (i, task) in quest.tasks.iter().enumerate() {
        if task.index != i || task.task_id.is_empty() || !ids.insert(task.task_id.as_str()) {
            out.push(QuestViolation { invariant: Invariant::TaskIndex, index: Some(i) });
        }
    }
    out
}

/// Accepts a draft iff every quest invariant holds. Ids derive from a content
/// hash of the draft, so equal drafts give equal quests.
pub fn validate_quest(draft: &QuestDraft) -> Result<Quest, Vec<QuestViolation>> {
    let violations = draft_violations(draft);
    if !violations.is_empty() {
        return Err(violations);
    }
    let canonical = serde_json::to_vec(&draft.tasks).expect("drafts serialize");
    let hash = content_hash(&[draft.goal_text.as_bytes(), &canonical]);
    let quest_id = format!("q{}", &hash[..12]);
    let tasks = draft
        .tasks
        .iter()
        .enumerate()
        .map(|(index, t)| QuestTask {
            task_id: format!("{quest_id}-{index}"),
            index,
            title: t.title.clone(),
            prompt: t.prompt.clone(),
            bloom: BloomLevel::new(t.bloom as u8).expect("range checked"),
            criteria: t
                .criteria
                .iter()
                .map(|c| RequiredElement { label: c.label.clone(), min_count: c.min_count as u32 })
                .collect(),
            status: if index == 0 { TaskStatus::Active } else { TaskStatus::Locked },
        })
        .collect();
    Ok(Quest { quest_id, goal_text: draft.goal_text.clone(), tasks })
}

/// Lowercases, trims and hyphenates a label; `None` if nothing usable is left.
pub fn normalize_label(raw: &str) -> Option<String> {
    let joined = raw
        .trim()
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("-");
    is_label(&joined).then_some(joined)
}

/// Best-effort repair: clamps Bloom ordinals and counts, normalizes and
/// deduplicates criteria labels (first occurrence wins, unusable labels are
/// dropped), stable-sorts tasks by Bloom and keeps the first seven.
/// Idempotent. Drafts that are too short or lack a low start or high end stay
/// invalid.
pub fn repair_draft(draft: &QuestDraft) -> QuestDraft {
    let mut tasks: Vec<TaskDraft> = draft
        .tasks
        .iter()
        .map(|t| {
            let mut seen = BTreeSet::new();
            let criteria = t
                .criteria
                .iter()
                .filter_map(|c| {
                    let label = normalize_label(&c.label)?;
                    seen.insert(label.clone()).then(|| CriterionDraft { label, min_count: c.min_count.max(1) })
                })
                .collect();
            TaskDraft {
                title: t.title.clone(),
                prompt: t.prompt.clone(),
                bloom: t.bloom.clamp(1, 6),
                criteria,
            }
        })
        .collect();
    tasks.sort_by_key(|t| t.bloom);
    tasks.truncate(MAX_TASKS);
    QuestDraft { goal_text: draft.goal_text.clone(), tasks }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestTemplate {
    pub name: String,
    pub topic_keywords: Vec<String>,
    pub tasks: Vec<TaskDraft>,
}

impl QuestTemplate {
    /// Number of distinct goal words that are topic keywords.
    pub fn score(&self, goal: &str) -> usize {
        let goal_words: BTreeSet<String> = words(goal).into_iter().collect();
        self.topic_keywords.iter().filter(|k| goal_words.contains(*k)).collect::<BTreeSet<_>>().len()
    }

    /// The template's tasks as a draft for `goal`.
    pub fn instantiate(&self, goal: &str) -> QuestDraft {
        let topic = goal.trim();
        let fill = |s: &str| s.replace("{goal}", topic);
        QuestDraft {
            goal_text: goal.to_owned(),
            tasks: self
                .tasks
                .iter()
                .map(|t| TaskDraft {
                    title: fill(&t.title),
                    prompt: fill(&t.prompt),
                    bloom: t.bloom,
                    criteria: t.criteria.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestLibrary {
    pub version: String,
    pub templates: Vec<QuestTemplate>,
    pub fallback: QuestTemplate,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLibrary {
    version: String,
    templates: Vec<QuestTemplate>,
}

impl Default for QuestLibrary {
    fn default() -> Self {
        QuestLibrary::from_toml(DEFAULT_LIBRARY).expect("shipped quest library is valid")
    }
}

impl QuestLibrary {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let raw: RawLibrary = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut templates = raw.templates;
        let fallback_at = templates
            .iter()
            .position(|t| t.name == GENERIC_TEMPLATE)
            .ok_or("no `generic` fallback template")?;
        let fallback = templates.remove(fallback_at);
        let library = QuestLibrary { version: raw.version, templates, fallback };
        library.check()?;
        Ok(library)
    }

    /// Every template is a valid quest ladder with lowercase keywords.
    pub fn check(&self) -> Result<(), String> {
        let mut names = BTreeSet::new();
        for t in self.templates.iter().chain([&self.fallback]) {
            if !names.insert(t.name.as_str()) {
                return Err(format!("duplicate template `{}`", t.name));
            }
            if let Some(k) = t.topic_keywords.iter().find(|k| words(k) != [k.as_str()]) {
                return Err(format!("template `{}`: keyword `{k}` is not one lowercase word", t.name));
            }
            let violations = draft_violations(&t.instantiate("sample goal"));
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
                return Err(format!("template `{}`: {}", t.name, list.join("; ")));
            }
        }
        if self.templates.iter().any(|t| t.topic_keywords.is_empty()) {
            return Err("topic templates need keywords".into());
        }
        Ok(())
    }

    /// Highest keyword overlap wins; ties go to the lexicographically
    /// smallest first keyword; no overlap gives the fallback.
    pub fn match_template(&self, goal: &str) -> &QuestTemplate {
        self.templates
            .iter()
            .map(|t| (t.score(goal), t))
            .filter(|(score, _)| *score > 0)
            .min_by(|(sa, ta), (sb, tb)| sb.cmp(sa).then_with(|| ta.topic_keywords[0].cmp(&tb.topic_keywords[0])))
            .map_or(&self.fallback, |(_, t)| t)
    }

    pub fn template(&self, name: &str) -> Option<&QuestTemplate> {
        self.templates.iter().chain([&self.fallback]).find(|t| t.name == name)
    }
}

/// Template match against the shipped library.
pub fn match_template(goal: &str) -> QuestTemplate {
    QuestLibrary::default().match_template(goal).clone()
}

/// Drafts a quest for `goal` through `provider`, repairing the draft when it
/// breaks an invariant. The goal text is kept verbatim.
pub fn generate_quest(goal: &str, provider: &dyn Provider) -> Result<Quest, QuestError> {
    if goal.trim().is_empty() {
        return Err(QuestError::EmptyGoal);
    }
    let request = QuestRequest { goal_text: goal.to_owned(), desired_length: None };
    let mut draft = provider.draft_quest(&request)?;
    draft.goal_text = goal.to_owned();
    validate_quest(&draft)
        .or_else(|_| validate_quest(&repair_draft(&draft)))
        .map_err(QuestError::UnrepairableDraft)
}
