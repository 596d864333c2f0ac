//! Session types and the event reducer.
//!
//! A session is an event-sourced record: its state is the left fold of its
//! events through [`reduce`]. The reducer does no I/O; work for other modules
//! (quest drafting, canvas analysis, feedback composition, styling) is
//! returned as [`Effect`] values and comes back later as new events.

mod reducer;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canvas::{CanvasDocument, HelperObject, Stroke};
use crate::feedback::{CanvasAnalysis, FeedbackRequest, MonitorPolicy};
use crate::scaffold::StyleKind;

pub use reducer::{
    confirm_task_completion, mark_task_ready, readiness, reduce, rule_for, EffectType,
    ReduceError, TransitionRule, Transition, TRANSITIONS,
};

/// Position in Bloom's taxonomy, 1 (Remember) through 6 (Create).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BloomLevel(u8);

impl BloomLevel {
    pub const REMEMBER: BloomLevel = BloomLevel(1);
    pub const UNDERSTAND: BloomLevel = BloomLevel(2);
    pub const APPLY: BloomLevel = BloomLevel(3);
    pub const ANALYZE: BloomLevel = BloomLevel(4);
    pub const EVALUATE: BloomLevel = BloomLevel(5);
    pub const CREATE: BloomLevel = BloomLevel(6);

    pub const ALL: [BloomLevel; 6] = [
        Self::REMEMBER,
        Self::UNDERSTAND,
        Self::APPLY,
        Self::ANALYZE,
        Self::EVALUATE,
        Self::CREATE,
    ];

    pub fn new(ordinal: u8) -> Option<Self> {
        (1..=6).contains(&ordinal).then_some(BloomLevel(ordinal))
    }

    pub fn ordinal(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "remember",
            2 => "understand",
            3 => "apply",
            4 => "analyze",
            5 => "evaluate",
            _ => "create",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl TryFrom<u8> for BloomLevel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        BloomLevel::new(v).ok_or_else(|| format!("Bloom ordinal {v} outside 1..=6"))
    }
}

impl From<BloomLevel> for u8 {
    fn from(b: BloomLevel) -> u8 {
        b.0
    }
}

impl fmt::Display for BloomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A machine-checkable completion criterion: at least `min_count`
/// elements labelled `label` on the canvas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequiredElement {
    pub label: String,
    pub min_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Locked,
    Active,
    ReadyToComplete,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestTask {
    pub task_id: String,
    pub index: usize,
    pub title: String,
    pub prompt: String,
    pub bloom: BloomLevel,
    pub criteria: Vec<RequiredElement>,
    pub status: TaskStatus,
}

impl QuestTask {
    /// Active or ReadyToComplete.
    pub fn is_current(&self) -> bool {
        matches!(self.status, TaskStatus::Active | TaskStatus::ReadyToComplete)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quest {
    pub quest_id: String,
    pub goal_text: String,
    pub tasks: Vec<QuestTask>,
}

impl Quest {
    pub fn current_task(&self) -> Option<&QuestTask> {
        self.tasks.iter().find(|t| t.is_current())
    }

    pub fn task(&self, task_id: &str) -> Option<&QuestTask> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn completed_count(&self) -> usize {
        self.tasks.iter().filter(|t| t.status == TaskStatus::Completed).count()
    }

    pub fn all_completed(&self) -> bool {
        self.tasks.iter().all(|t| t.status == TaskStatus::Completed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackDimension {
    Motivational,
    Cognitive,
    Metacognitive,
    SelfRelevant,
}

impl FeedbackDimension {
    pub const ALL: [FeedbackDimension; 4] = [
        FeedbackDimension::Motivational,
        FeedbackDimension::Cognitive,
        FeedbackDimension::Metacognitive,
        FeedbackDimension::SelfRelevant,
    ];

    pub fn color_code(self) -> &'static str {
        match self {
            FeedbackDimension::Motivational => "#f5a623",
            FeedbackDimension::Cognitive => "#4a90e2",
            FeedbackDimension::Metacognitive => "#9b59b6",
            FeedbackDimension::SelfRelevant => "#2ecc71",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeedbackDimension::Motivational => "motivational",
            FeedbackDimension::Cognitive => "cognitive",
            FeedbackDimension::Metacognitive => "metacognitive",
            FeedbackDimension::SelfRelevant => "self_relevant",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == name)
    }
}

impl fmt::Display for FeedbackDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackCard {
    pub dimension: FeedbackDimension,
    pub text: String,
    /// Assigned by the reducer when the card enters the session log.
    pub seq: u64,
    pub color_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GemAward {
    pub task_id: String,
    /// Event sequence number of the confirming event.
    pub seq: u64,
}

/// Append-only: one gem per completed task.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GemLedger {
    pub gem_count: u32,
    pub awards: Vec<GemAward>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    GoalEntry,
    QuestActive,
    AllComplete,
    StyleApplied,
}

impl SessionPhase {
    pub const ALL: [SessionPhase; 4] = [
        SessionPhase::GoalEntry,
        SessionPhase::QuestActive,
        SessionPhase::AllComplete,
        SessionPhase::StyleApplied,
    ];
}

/// Scheduler bookkeeping for periodic analysis. Only the reducer writes it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorState {
    /// Canvas revision at the most recent analysis request.
    pub last_requested_revision: Option<u64>,
    /// Canvas revision at the most recent tick boundary or check.
    pub last_observed_revision: Option<u64>,
    /// Consecutive observations with no revision change.
    pub idle_observations: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleRequest {
    pub style: StyleKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleArtifact {
    pub artifact_ref: String,
    pub style: StyleKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub phase: SessionPhase,
    pub goal: Option<String>,
    pub quest: Option<Quest>,
    pub canvas: CanvasDocument,
    pub gems: GemLedger,
    pub feedback_log: Vec<FeedbackCard>,
    pub event_seq: u64,
    pub last_analysis: Option<CanvasAnalysis>,
    pub style: Option<StyleKind>,
    pub policy: MonitorPolicy,
    pub monitor: MonitorState,
    pub pending_style: Option<StyleRequest>,
    pub artifacts: Vec<StyleArtifact>,
}

impl Session {
    pub fn new(session_id: impl Into<String>, policy: MonitorPolicy) -> Self {
        Session {
            session_id: session_id.into(),
            phase: SessionPhase::GoalEntry,
            goal: None,
            quest: None,
            canvas: CanvasDocument::new(),
            gems: GemLedger::default(),
            feedback_log: Vec::new(),
            event_seq: 0,
            last_analysis: None,
            style: None,
            policy,
            monitor: MonitorState::default(),
            pending_style: None,
            artifacts: Vec::new(),
        }
    }

    pub fn current_task(&self) -> Option<&QuestTask> {
        self.quest.as_ref().and_then(Quest::current_task)
    }

    /// Wraps `kind` with this session's next sequence number.
    pub fn next_event(&self, kind: EventKind) -> SessionEvent {
        SessionEvent { seq: self.event_seq + 1, kind }
    }

    /// Applies `kind` with the next sequence number.
    pub fn apply(&self, kind: EventKind) -> Result<Transition, ReduceError> {
        reduce(self, &self.next_event(kind))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    GoalSubmitted { goal: String },
    QuestGenerated { quest: Quest },
    StrokeAdded { stroke: Stroke },
    HelperPlaced { helper: HelperObject },
    TickElapsed { tick: u64 },
    CheckRequested,
    AnalysisArrived { analysis: CanvasAnalysis },
    FeedbackComposed { cards: Vec<FeedbackCard> },
    TaskCompletionConfirmed { task_id: String },
    StyleRequested { style: StyleKind, seed: u64 },
    StyleApplied { artifact_ref: String },
}

/// Payload-free discriminant of [`EventKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventType {
    GoalSubmitted,
    QuestGenerated,
    StrokeAdded,
    HelperPlaced,
    TickElapsed,
    CheckRequested,
    AnalysisArrived,
    FeedbackComposed,
    TaskCompletionConfirmed,
    StyleRequested,
    StyleApplied,
}

impl EventType {
    pub const ALL: [EventType; 11] = [
        EventType::GoalSubmitted,
        EventType::QuestGenerated,
        EventType::StrokeAdded,
        EventType::HelperPlaced,
        EventType::TickElapsed,
        EventType::CheckRequested,
        EventType::AnalysisArrived,
        EventType::FeedbackComposed,
        EventType::TaskCompletionConfirmed,
        EventType::StyleRequested,
        EventType::StyleApplied,
    ];
}

impl EventKind {
    pub fn event_type(&self) -> EventType {
        match self {
            EventKind::GoalSubmitted { .. } => EventType::GoalSubmitted,
            EventKind::QuestGenerated { .. } => EventType::QuestGenerated,
            EventKind::StrokeAdded { .. } => EventType::StrokeAdded,
            EventKind::HelperPlaced { .. } => EventType::HelperPlaced,
            EventKind::TickElapsed { .. } => EventType::TickElapsed,
            EventKind::CheckRequested => EventType::CheckRequested,
            EventKind::AnalysisArrived { .. } => EventType::AnalysisArrived,
            EventKind::FeedbackComposed { .. } => EventType::FeedbackComposed,
            EventKind::TaskCompletionConfirmed { .. } => EventType::TaskCompletionConfirmed,
            EventKind::StyleRequested { .. } => EventType::StyleRequested,
            EventKind::StyleApplied { .. } => EventType::StyleApplied,
        }
    }
}

/// Why an analysis was requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisTrigger {
    Tick,
    Check,
}

/// Work the reducer asks another module to perform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    GenerateQuest {
        goal: String,
    },
    AnalyzeCanvas {
        at_revision: u64,
        prior_revision: Option<u64>,
        trigger: AnalysisTrigger,
    },
    ComposeFeedback {
        request: FeedbackRequest,
    },
    ApplyStyle {
        style: StyleKind,
        seed: u64,
    },
}
