use std::collections::BTreeSet;

use thiserror::Error;

use super::{
    AnalysisTrigger, Effect, EventKind, EventType, FeedbackCard, GemAward, Session, SessionEvent,
    SessionPhase, StyleArtifact, StyleRequest, TaskStatus,
};
use crate::canvas::CanvasError;
use crate::feedback::{
    should_analyze, CanvasAnalysis, FeedbackRequest, FeedbackTrigger, MonitorTrigger,
};
use crate::quest::quest_violations;

use SessionPhase::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("event seq {got} out of order, expected {expected}")]
    OutOfOrderEvent { expected: u64, got: u64 },
    #[error("{event:?} is not allowed in phase {phase:?}")]
    IllegalTransition { phase: SessionPhase, event: EventType },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{task_id}` is {status:?}, not ready to complete")]
    TaskNotReady { task_id: String, status: TaskStatus },
    #[error("task `{0}` is already completed")]
    AlreadyCompleted(String),
    #[error(transparent)]
    Canvas(#[from] CanvasError),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectType {
    GenerateQuest,
    AnalyzeCanvas,
    ComposeFeedback,
    ApplyStyle,
}

/// One row of the transition table.
#[derive(Debug, Clone, Copy)]
pub struct TransitionRule {
    pub event: EventType,
    /// Phases in which the event is accepted.
    pub phases: &'static [SessionPhase],
    /// Effect the event may emit.
    pub effect: Option<EffectType>,
    /// Whether the event may change the set or position of helper objects.
    pub touches_helpers: bool,
}

pub static TRANSITIONS: [TransitionRule; 11] = [
    TransitionRule {
        event: EventType::GoalSubmitted,
        phases: &[GoalEntry],
        effect: Some(EffectType::GenerateQuest),
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::QuestGenerated,
        phases: &[GoalEntry],
        effect: None,
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::StrokeAdded,
        phases: &[QuestActive, AllComplete],
        effect: None,
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::HelperPlaced,
        phases: &[QuestActive, AllComplete],
        effect: None,
        touches_helpers: true,
    },
    TransitionRule {
        event: EventType::TickElapsed,
        phases: &[QuestActive],
        effect: Some(EffectType::AnalyzeCanvas),
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::CheckRequested,
        phases: &[QuestActive],
        effect: Some(EffectType::AnalyzeCanvas),
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::AnalysisArrived,
        phases: &[QuestActive],
        effect: Some(EffectType::ComposeFeedback),
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::FeedbackComposed,
        phases: &[QuestActive, AllComplete],
        effect: None,
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::TaskCompletionConfirmed,
        phases: &[QuestActive, AllComplete, StyleApplied],
        effect: Some(EffectType::ComposeFeedback),
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::StyleRequested,
        phases: &[AllComplete, StyleApplied],
        effect: Some(EffectType::ApplyStyle),
        touches_helpers: false,
    },
    TransitionRule {
        event: EventType::StyleApplied,
        phases: &[AllComplete, StyleApplied],
        effect: None,
        touches_helpers: false,
    },
];

pub fn rule_for(event: EventType) -> &'static TransitionRule {
    TRANSITIONS
        .iter()
        .find(|r| r.event == event)
        .expect("every event type has a rule")
}

/// Result of a successful reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub session: Session,
    pub effects: Vec<Effect>,
}

pub fn reduce(session: &Session, event: &SessionEvent) -> Result<Transition, ReduceError> {
    let expected = session.event_seq + 1;
    if event.seq != expected {
        return Err(ReduceError::OutOfOrderEvent { expected, got: event.seq });
    }
    let event_type = event.kind.event_type();
    let rule = rule_for(event_type);
    if !rule.phases.contains(&session.phase) {
        return Err(ReduceError::IllegalTransition { phase: session.phase, event: event_type });
    }

    let mut next = session.clone();
    next.event_seq = event.seq;
    let mut effects = Vec::new();

    match &event.kind {
        EventKind::GoalSubmitted { goal } => {
            if goal.trim().is_empty() {
                return Err(ReduceError::InvalidEvent("goal is empty".into()));
            }
            next.goal = Some(goal.clone());
            effects.push(Effect::GenerateQuest { goal: goal.clone() });
        }
        EventKind::QuestGenerated { quest } => {
            if next.goal.as_deref() != Some(quest.goal_text.as_str()) {
                return Err(ReduceError::InvalidEvent(
                    "quest goal does not match the submitted goal".into(),
                ));
            }
            let violations = quest_violations(quest);
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
                return Err(ReduceError::InvalidEvent(format!("invalid quest: {}", list.join("; "))));
            }
            let mut quest = quest.clone();
            for task in &mut quest.tasks {
                task.status = if task.index == 0 { TaskStatus::Active } else { TaskStatus::Locked };
            }
            next.quest = Some(quest);
            next.phase = QuestActive;
        }
        EventKind::StrokeAdded { stroke } => {
            next.canvas.push_stroke(stroke.clone())?;
        }
        EventKind::HelperPlaced { helper } => {
            if next.canvas.helper(&helper.helper_id).is_some() {
                next.canvas.reposition_helper(&helper.helper_id, helper.position)?;
            } else {
                next.canvas.push_helper(helper.clone())?;
            }
        }
        EventKind::TickElapsed { tick } => {
            let trigger = MonitorTrigger::Tick(*tick);
            if trigger.is_boundary(&next.policy) {
                observe(&mut next);
            }
            if should_analyze(&next.policy, &next, trigger) {
                effects.push(request_analysis(&mut next, AnalysisTrigger::Tick));
            }
        }
        EventKind::CheckRequested => {
            observe(&mut next);
            effects.push(request_analysis(&mut next, AnalysisTrigger::Check));
        }
        EventKind::AnalysisArrived { analysis } => {
            if analysis.at_revision > next.canvas.revision {
                return Err(ReduceError::InvalidEvent(format!(
                    "analysis of revision {} is ahead of canvas revision {}",
                    analysis.at_revision, next.canvas.revision
                )));
            }
            let previous = next.last_analysis.take();
            let newly_satisfied = newly_satisfied(&next, previous.as_ref(), analysis);
            apply_readiness(&mut next, analysis);
            let stalled = next.monitor.idle_observations >= next.policy.stall_ticks;
            next.last_analysis = Some(analysis.clone());
            effects.push(Effect::ComposeFeedback {
                request: FeedbackRequest {
                    trigger: FeedbackTrigger::Analysis,
                    analysis: Some(analysis.clone()),
                    newly_satisfied,
                    stalled,
                },
            });
        }
        EventKind::FeedbackComposed { cards } => {
            append_cards(&mut next, cards)?;
        }
        EventKind::TaskCompletionConfirmed { task_id } => {
            next = confirm_task_completion(&next, task_id)?;
            let trigger = if next.phase == AllComplete {
                FeedbackTrigger::QuestCompleted
            } else {
                let title = next
                    .quest
                    .as_ref()
                    .and_then(|q| q.task(task_id))
                    .map(|t| t.title.clone())
                    .unwrap_or_default();
                FeedbackTrigger::TaskCompleted { task_id: task_id.clone(), title }
            };
            effects.push(Effect::ComposeFeedback {
                request: FeedbackRequest {
                    trigger,
                    analysis: next.last_analysis.clone(),
                    newly_satisfied: Vec::new(),
                    stalled: false,
                },
            });
        }
        EventKind::StyleRequested { style, seed } => {
            next.pending_style = Some(StyleRequest { style: *style, seed: *seed });
            effects.push(Effect::ApplyStyle { style: *style, seed: *seed });
        }
        EventKind::StyleApplied { artifact_ref } => {
            let Some(request) = next.pending_style.take() else {
                return Err(ReduceError::InvalidEvent("no style request is pending".into()));
            };
            if artifact_ref.is_empty() {
                return Err(ReduceError::InvalidEvent("empty artifact reference".into()));
            }
            next.artifacts.push(StyleArtifact {
                artifact_ref: artifact_ref.clone(),
                style: request.style,
                seed: request.seed,
            });
            next.style = Some(request.style);
            next.phase = StyleApplied;
        }
    }

    debug_assert!(
        rule.touches_helpers || next.canvas.helpers == session.canvas.helpers,
        "{event_type:?} changed helpers without a placement event"
    );
    Ok(Transition { session: next, effects })
}

fn observe(session: &mut Session) {
    let revision = session.canvas.revision;
    let monitor = &mut session.monitor;
    if monitor.last_observed_revision == Some(revision) {
        monitor.idle_observations = monitor.idle_observations.saturating_add(1);
    } else {
        monitor.idle_observations = 0;
        monitor.last_observed_revision = Some(revision);
    }
}

fn request_analysis(session: &mut Session, trigger: AnalysisTrigger) -> Effect {
    let at_revision = session.canvas.revision;
    session.monitor.last_requested_revision = Some(at_revision);
    Effect::AnalyzeCanvas {
        at_revision,
        prior_revision: session.last_analysis.as_ref().map(|a| a.at_revision),
        trigger,
    }
}

/// Whether `analysis` satisfies every criterion of the current task.
pub fn readiness(session: &Session, analysis: &CanvasAnalysis) -> bool {
    session.current_task().is_some_and(|task| {
        task.criteria
            .iter()
            .all(|c| analysis.elements.get(&c.label).copied().unwrap_or(0) >= c.min_count)
    })
}

fn newly_satisfied(
    session: &Session,
    previous: Option<&CanvasAnalysis>,
    current: &CanvasAnalysis,
) -> Vec<String> {
    let Some(task) = session.current_task() else {
        return Vec::new();
    };
    let met = |a: Option<&CanvasAnalysis>, label: &str, min: u32| {
        a.and_then(|a| a.elements.get(label)).copied().unwrap_or(0) >= min
    };
    task.criteria
        .iter()
        .filter(|c| met(Some(current), &c.label, c.min_count) && !met(previous, &c.label, c.min_count))
        .map(|c| c.label.clone())
        .collect()
}

fn apply_readiness(session: &mut Session, analysis: &CanvasAnalysis) {
    if session.phase != QuestActive || !readiness(session, analysis) {
        return;
    }
    if let Some(task) = session
        .quest
        .as_mut()
        .and_then(|q| q.tasks.iter_mut().find(|t| t.status == TaskStatus::Active))
    {
        task.status = TaskStatus::ReadyToComplete;
    }
}

/// Promotes the active task to ReadyToComplete when `analysis` meets all of
/// its criteria; otherwise returns the session unchanged.
pub fn mark_task_ready(session: &Session, analysis: &CanvasAnalysis) -> Session {
    let mut next = session.clone();
    apply_readiness(&mut next, analysis);
    next
}

/// Completes a ReadyToComplete task, awards its gem and unlocks the next
/// task (or moves the session to AllComplete after the last one).
pub fn confirm_task_completion(session: &Session, task_id: &str) -> Result<Session, ReduceError> {
    let mut next = session.clone();
    let seq = next.event_seq;
    let quest = next
        .quest
        .as_mut()
        .ok_or_else(|| ReduceError::UnknownTask(task_id.to_owned()))?;
    let index = quest
        .tasks
        .iter()
        .position(|t| t.task_id == task_id)
        .ok_or_else(|| ReduceError::UnknownTask(task_id.to_owned()))?;
    match quest.tasks[index].status {
        TaskStatus::ReadyToComplete => {}
        TaskStatus::Completed => return Err(ReduceError::AlreadyCompleted(task_id.to_owned())),
        status => {
            return Err(ReduceError::TaskNotReady { task_id: task_id.to_owned(), status });
        }
    }
    if next.gems.awards.iter().any(|a| a.task_id == task_id) {
        return Err(ReduceError::AlreadyCompleted(task_id.to_owned()));
    }
    quest.tasks[index].status = TaskStatus::Completed;
    if let Some(following) = quest.tasks.get_mut(index + 1) {
        following.status = TaskStatus::Active;
    }
    let all_done = quest.all_completed();
    next.gems.gem_count += 1;
    next.gems.awards.push(GemAward { task_id: task_id.to_owned(), seq });
    if all_done {
        next.phase = AllComplete;
    }
    Ok(next)
}

fn append_cards(session: &mut Session, cards: &[FeedbackCard]) -> Result<(), ReduceError> {
    if cards.is_empty() || cards.len() > 4 {
        return Err(ReduceError::InvalidEvent(format!(
            "expected 1 to 4 cards, got {}",
            cards.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for card in cards {
        if !seen.insert(card.dimension) {
            return Err(ReduceError::InvalidEvent(format!(
                "two {} cards in one composition",
                card.dimension
            )));
        }
        if card.text.trim().is_empty() {
            return Err(ReduceError::InvalidEvent("empty card text".into()));
        }
        if card.color_code != card.dimension.color_code() {
            return Err(ReduceError::InvalidEvent(format!(
                "color {} does not belong to {}",
                card.color_code, card.dimension
            )));
        }
    }
    let last = session.feedback_log.last().map_or(0, |c| c.seq);
    for (seq, card) in (last + 1..).zip(cards) {
        session.feedback_log.push(FeedbackCard { seq, ..card.clone() });
    }
    Ok(())
}
