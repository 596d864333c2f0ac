//! Turns reducer effects into follow-up events through a provider.
//!
//! [`fulfil`] performs one effect against a snapshot of the session. It does
//! no state changes of its own; its result is an event for the reducer.
//! [`Driver`] chains the two synchronously, which is what replay tooling,
//! the demo and tests use. The service runs `fulfil` off its session queue
//! instead.

use std::collections::VecDeque;

use thiserror::Error;

use crate::domain::{Effect, EventKind, FeedbackCard, ReduceError, Session, SessionEvent};
use crate::feedback::{compose_feedback_with, FeedbackError, FeedbackTable};
use crate::provider::{Provider, ProviderError};
use crate::quest::{generate_quest, QuestError};
use crate::scaffold::{apply_style, ScaffoldError, StyleKind};
use crate::text::content_hash;

#[derive(Debug, Error)]
pub enum EffectError {
    #[error(transparent)]
    Quest(#[from] QuestError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Scaffold(#[from] ScaffoldError),
}

#[derive(Debug, Error)]
pub enum DriveError {
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Effect(#[from] EffectError),
}

/// A styled image waiting to be stored under `artifact_ref`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub artifact_ref: String,
    pub png: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fulfilled {
    pub event: EventKind,
    /// Present for style effects; must be stored before the event is applied.
    pub artifact: Option<Artifact>,
}

/// Content-derived name of a styled image.
pub fn artifact_ref(style: StyleKind, seed: u64, png: &[u8]) -> String {
    let hash = content_hash(&[style.name().as_bytes(), &seed.to_le_bytes(), png]);
    format!("{}-{seed}-{}", style.name(), &hash[..16])
}

/// Performs `effect` for `session` and returns the event that reports it.
pub fn fulfil(
    session: &Session,
    effect: &Effect,
    provider: &dyn Provider,
    table: &FeedbackTable,
) -> Result<Fulfilled, EffectError> {
    let event = match effect {
        Effect::GenerateQuest { goal } => EventKind::QuestGenerated { quest: generate_quest(goal, provider)? },
        Effect::AnalyzeCanvas { prior_revision, .. } => {
            let analysis = provider.analyze_canvas(&session.canvas, session.current_task(), *prior_revision)?;
            EventKind::AnalysisArrived { analysis }
        }
        Effect::ComposeFeedback { request } => EventKind::FeedbackComposed {
            cards: compose_feedback_with(session, request, table, provider)?,
        },
        Effect::ApplyStyle { style, seed } => {
            let png = apply_style(session, *style, *seed, provider)?;
            let artifact_ref = artifact_ref(*style, *seed, &png);
            return Ok(Fulfilled {
                event: EventKind::StyleApplied { artifact_ref: artifact_ref.clone() },
                artifact: Some(Artifact { artifact_ref, png }),
            });
        }
    };
    Ok(Fulfilled { event, artifact: None })
}

/// Everything one learner action led to.
#[derive(Debug)]
pub struct Step {
    pub session: Session,
    /// Applied events in order, starting with the submitted one.
    pub events: Vec<SessionEvent>,
    pub artifacts: Vec<Artifact>,
    /// Set when an effect failed; `session` and `events` hold the progress
    /// made before the failure.
    pub error: Option<EffectError>,
}

impl Step {
    /// Cards added to the feedback log during this step.
    pub fn new_cards(&self) -> Vec<FeedbackCard> {
        let added: usize = self
            .events
            .iter()
            .map(|e| match &e.kind {
                EventKind::FeedbackComposed { cards } => cards.len(),
                _ => 0,
            })
            .sum();
        let log = &self.session.feedback_log;
        log[log.len() - added..].to_vec()
    }
}

/// Synchronous event loop: applies an event, then fulfils its effects (and
/// theirs) in FIFO order until none are left.
pub struct Driver<'a> {
    pub provider: &'a dyn Provider,
    pub table: &'a FeedbackTable,
}

impl<'a> Driver<'a> {
    pub fn new(provider: &'a dyn Provider, table: &'a FeedbackTable) -> Self {
        Driver { provider, table }
    }

    pub fn submit(&self, session: &Session, kind: EventKind) -> Result<Step, ReduceError> {
        let first = session.next_event(kind);
        let transition = crate::domain::reduce(session, &first)?;
        let mut step = Step { session: transition.session, events: vec![first], artifacts: Vec::new(), error: None };
        let mut queue: VecDeque<Effect> = transition.effects.into();
        while let Some(effect) = queue.pop_front() {
            let fulfilled = match fulfil(&step.session, &effect, self.provider, self.table) {
                Ok(f) => f,
                Err(e) => {
                    step.error = Some(e);
                    break;
                }
            };
            let event = step.session.next_event(fulfilled.event);
            let transition = crate::domain::reduce(&step.session, &event)?;
            step.artifacts.extend(fulfilled.artifact);
            step.events.push(event);
            step.session = transition.session;
            queue.extend(transition.effects);
        }
        Ok(step)
    }
}
