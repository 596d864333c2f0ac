//! Feedback: when to analyze the canvas, which cards to compose from an
//! analysis, and the language rules every card must pass.

mod compose;
mod framing;
mod templates;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Session, SessionPhase};

pub use compose::{compose_feedback, compose_feedback_with, FeedbackRequest, FeedbackTrigger};
pub use framing::{validate_framing, FramingRules, FramingViolation};
pub use templates::{display_label, render_card, CardTemplate, FeedbackError, FeedbackTable, Slots};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisSource {
    Offline,
    Remote,
}

/// What a provider saw on the canvas at one revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanvasAnalysis {
    pub elements: BTreeMap<String, u32>,
    pub stroke_count: u32,
    /// Canvas revision advanced since the prior analysis.
    pub changed: bool,
    pub source: AnalysisSource,
    pub at_revision: u64,
}

impl CanvasAnalysis {
    pub fn empty(at_revision: u64) -> Self {
        CanvasAnalysis {
            elements: BTreeMap::new(),
            stroke_count: 0,
            changed: false,
            source: AnalysisSource::Offline,
            at_revision,
        }
    }

    /// Labels seen at least once.
    pub fn distinct_elements(&self) -> usize {
        self.elements.values().filter(|&&n| n > 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorPolicy {
    pub tick_interval_secs: u64,
    pub stall_ticks: u32,
    pub debounce: bool,
}

impl Default for MonitorPolicy {
    fn default() -> Self {
        MonitorPolicy { tick_interval_secs: 30, stall_ticks: 4, debounce: true }
    }
}

impl MonitorPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.tick_interval_secs < 5 {
            return Err(format!("tick interval {}s is below 5s", self.tick_interval_secs));
        }
        if self.stall_ticks < 1 {
            return Err("stall_ticks must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorTrigger {
    /// Learner pressed Check.
    Check,
    /// Timer tick; the payload is elapsed seconds since the quest started.
    Tick(u64),
}

impl MonitorTrigger {
    pub fn is_boundary(&self, policy: &MonitorPolicy) -> bool {
        match *self {
            MonitorTrigger::Check => false,
            MonitorTrigger::Tick(t) => t > 0 && t % policy.tick_interval_secs.max(1) == 0,
        }
    }
}

/// Manual checks always analyze; ticks analyze on interval boundaries, and
/// with debounce only when the canvas moved since the last request.
pub fn should_analyze(policy: &MonitorPolicy, session: &Session, trigger: MonitorTrigger) -> bool {
    if session.phase != SessionPhase::QuestActive {
        return false;
    }
    match trigger {
        MonitorTrigger::Check => true,
        MonitorTrigger::Tick(_) => {
            trigger.is_boundary(policy)
                && (!policy.debounce
                    || session.monitor.last_requested_revision != Some(session.canvas.revision))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn active_session() -> Session {
        let mut s = Session::new("s", MonitorPolicy::default());
        s.phase = SessionPhase::QuestActive;
        s
    }

    #[test]
    fn check_always_analyzes() {
        let mut s = active_session();
        s.monitor.last_requested_revision = Some(0);
        assert!(should_analyze(&s.policy, &s, MonitorTrigger::Check));
    }

    #[test]
    fn debounced_tick_on_unchanged_canvas() {
        let mut s = active_session();
        s.monitor.last_requested_revision = Some(0);
        assert!(!should_analyze(&s.policy, &s, MonitorTrigger::Tick(30)));
        s.canvas.revision = 1;
        assert!(should_analyze(&s.policy, &s, MonitorTrigger::Tick(30)));
        assert!(!should_analyze(&s.policy, &s, MonitorTrigger::Tick(31)));
        let no_debounce = MonitorPolicy { debounce: false, ..MonitorPolicy::default() };
        s.canvas.revision = 0;
        assert!(should_analyze(&no_debounce, &s, MonitorTrigger::Tick(60)));
    }

    #[test]
    fn policy_limits() {
        assert!(MonitorPolicy::default().validate().is_ok());
        assert!(MonitorPolicy { tick_interval_secs: 4, ..Default::default() }.validate().is_err());
        assert!(MonitorPolicy { stall_ticks: 0, ..Default::default() }.validate().is_err());
    }
}
