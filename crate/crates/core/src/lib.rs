//! Core library for SketchQuest, a drawing-to-learn tutor.
//!
//! A learner types a goal, receives a Bloom-ordered quest of drawing tasks,
//! draws on a shared canvas, and gets four-dimensional feedback cards from an
//! AI teammate. Everything in this crate is synchronous and free of network
//! servers; the HTTP service lives in `sketchquest-service`.
//!
//! Module map:
//!
//! - [`domain`]: session types and the event reducer (the workflow state machine)
//! - [`quest`]: goal → quest generation, validation and repair
//! - [`canvas`]: strokes, helper objects, canonical serialization, raster export
//! - [`feedback`]: analysis scheduling, card composition, framing rules
//! - [`scaffold`]: helper catalog, SVG sanitizer, style filters
//! - [`provider`]: the capability interface over offline and remote backends

pub mod canvas;
pub mod domain;
pub mod driver;
pub mod feedback;
pub mod provider;
pub mod quest;
pub mod scaffold;
pub mod text;

pub use canvas::{CanvasDocument, HelperObject, Point, Stroke};
pub use domain::{
    reduce, BloomLevel, Effect, FeedbackCard, FeedbackDimension, GemLedger, Quest, QuestTask,
    ReduceError, RequiredElement, Session, SessionEvent, SessionPhase, TaskStatus, Transition,
};
pub use feedback::{CanvasAnalysis, AnalysisSource, MonitorPolicy};
pub use provider::{Gateway, OfflineProvider, Provider, ProviderConfig, ProviderError};
pub use scaffold::StyleKind;
