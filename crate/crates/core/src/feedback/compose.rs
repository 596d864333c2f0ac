//! Card composition.
//!
//! Presence rules, one card per dimension at most:
//!
//! - motivational: always
//! - cognitive: some criterion of the current task is unmet; names the
//!   lowest-index unmet one
//! - metacognitive: stalled, or more than ten strokes per distinct element
//! - self-relevant: a criterion was newly met, or a task or the quest was
//!   just completed

use serde::{Deserialize, Serialize};

use super::templates::{display_label, FeedbackError, FeedbackTable, Slots};
use super::CanvasAnalysis;
use crate::domain::{FeedbackCard, FeedbackDimension, Session, SessionPhase};
use crate::provider::Provider;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeedbackTrigger {
    Analysis,
    TaskCompleted { task_id: String, title: String },
    QuestCompleted,
}

/// Everything the composer needs beyond the session itself. Built by the
/// reducer, which alone knows the previous analysis and stall counter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub trigger: FeedbackTrigger,
    pub analysis: Option<CanvasAnalysis>,
    /// Criteria labels of the current task met now but not before.
    pub newly_satisfied: Vec<String>,
    pub stalled: bool,
}

/// Offline composition from the template table.
pub fn compose_feedback(
    session: &Session,
    request: &FeedbackRequest,
    table: &FeedbackTable,
) -> Result<Vec<FeedbackCard>, FeedbackError> {
    compose(session, request, table, None)
}

/// Composition that asks `provider` to phrase each card first. Drafted text
/// that fails framing is replaced by the template rendering.
pub fn compose_feedback_with(
    session: &Session,
    request: &FeedbackRequest,
    table: &FeedbackTable,
    provider: &dyn Provider,
) -> Result<Vec<FeedbackCard>, FeedbackError> {
    compose(session, request, table, Some(provider))
}

fn compose(
    session: &Session,
    request: &FeedbackRequest,
    table: &FeedbackTable,
    provider: Option<&dyn Provider>,
) -> Result<Vec<FeedbackCard>, FeedbackError> {
    if !matches!(session.phase, SessionPhase::QuestActive | SessionPhase::AllComplete) {
        return Err(FeedbackError::NotComposable(session.phase));
    }
    let empty = CanvasAnalysis::empty(session.canvas.revision);
    let analysis = request
        .analysis
        .as_ref()
        .or(session.last_analysis.as_ref())
        .unwrap_or(&empty);
    let (done, total) = session
        .quest
        .as_ref()
        .map_or((0, 0), |q| (q.completed_count(), q.tasks.len()));

    let mut plan: Vec<(FeedbackDimension, Slots)> = Vec::with_capacity(4);

    let motivational = if session.phase == SessionPhase::AllComplete {
        "complete"
    } else if done == 0 && analysis.stroke_count == 0 && analysis.distinct_elements() == 0 {
        "start"
    } else {
        "progress"
    };
    plan.push((
        FeedbackDimension::Motivational,
        Slots::new().with("variant", motivational).with("done", done).with("total", total),
    ));

    if let Some(task) = session.current_task() {
        let unmet = task.criteria.iter().find_map(|c| {
            let have = analysis.elements.get(&c.label).copied().unwrap_or(0);
            (have < c.min_count).then_some((c, have))
        });
        if let Some((criterion, have)) = unmet {
            let variant = if have == 0 { "missing" } else { "more" };
            plan.push((
                FeedbackDimension::Cognitive,
                Slots::new()
                    .with("variant", variant)
                    .with("missing", display_label(&criterion.label)),
            ));
        }
    }

    let dense = analysis.stroke_count as usize > 10 * analysis.distinct_elements();
    if request.stalled || dense {
        let variant = if request.stalled { "stalled" } else { "dense" };
        let strategy = table.strategy(variant).unwrap_or("sketch the big shapes first");
        plan.push((
            FeedbackDimension::Metacognitive,
            Slots::new().with("variant", variant).with("strategy", strategy),
        ));
    }

    let milestone = match &request.trigger {
        FeedbackTrigger::QuestCompleted => Some(("quest", "the whole quest".to_owned())),
        FeedbackTrigger::TaskCompleted { title, .. } => Some(("task", title.clone())),
        FeedbackTrigger::Analysis => request
            .newly_satisfied
            .first()
            .map(|label| ("element", display_label(label))),
    };
    if let Some((variant, name)) = milestone {
        plan.push((
            FeedbackDimension::SelfRelevant,
            Slots::new().with("variant", variant).with("milestone", name),
        ));
    }

    plan.into_iter()
        .map(|(dimension, slots)| {
            let drafted = provider
                .and_then(|p| p.draft_feedback(dimension, &slots).ok())
                .filter(|text| table.rules.validate_for(dimension, text).is_ok());
            let text = match drafted {
                Some(text) => text,
                None => {
                    let text = table.render_text(dimension, &slots)?;
                    match table.rules.validate_for(dimension, &text) {
                        Ok(()) => text,
                        // learner words in a slot can trip a pattern; retry without them
                        Err(violations) => {
                            let text = table.render_text(dimension, &neutral(slots))?;
                            table
                                .rules
                                .validate_for(dimension, &text)
                                .map_err(|_| FeedbackError::FramingViolation { dimension, violations })?;
                            text
                        }
                    }
                }
            };
            Ok(FeedbackCard {
                dimension,
                text,
                seq: 0,
                color_code: dimension.color_code().to_owned(),
            })
        })
        .collect()
}

/// Stand-ins for slots that carry goal or label text.
const NEUTRAL_SLOTS: &[(&str, &str)] = &[("milestone", "this step"), ("missing", "remaining part")];

fn neutral(slots: Slots) -> Slots {
    NEUTRAL_SLOTS.iter().fold(slots, |s, (key, value)| if s.get(key).is_some() { s.with(key, value) } else { s })
}
