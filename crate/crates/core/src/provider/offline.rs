use super::{Provider, ProviderError};
use crate::canvas::CanvasDocument;
use crate::domain::{FeedbackDimension, QuestTask};
use crate::feedback::{AnalysisSource, CanvasAnalysis, FeedbackTable, Slots};
use crate::quest::{QuestDraft, QuestLibrary, QuestRequest};
use crate::scaffold::{stylize, HelperCatalog, HelperDraft, StyleKind};

/// Deterministic rule-based provider: template quests, census analysis,
/// template feedback, catalog helpers and filter styling. Every capability
/// is a pure function of its inputs.
#[derive(Debug, Clone, Default)]
pub struct OfflineProvider {
    pub quests: QuestLibrary,
    pub catalog: HelperCatalog,
    pub feedback: FeedbackTable,
}

impl OfflineProvider {
    pub fn new(quests: QuestLibrary, catalog: HelperCatalog, feedback: FeedbackTable) -> Self {
        OfflineProvider { quests, catalog, feedback }
    }

    /// Census analysis; `changed` compares against `prior_revision`.
    pub fn census(doc: &CanvasDocument, prior_revision: Option<u64>) -> CanvasAnalysis {
        CanvasAnalysis {
            elements: doc.element_census(),
            stroke_count: doc.strokes.len() as u32,
            changed: prior_revision != Some(doc.revision),
            source: AnalysisSource::Offline,
            at_revision: doc.revision,
        }
    }
}

impl Provider for OfflineProvider {
    fn draft_quest(&self, request: &QuestRequest) -> Result<QuestDraft, ProviderError> {
        Ok(self.quests.match_template(&request.goal_text).instantiate(&request.goal_text))
    }

    fn analyze_canvas(
        &self,
        doc: &CanvasDocument,
        _task: Option<&QuestTask>,
        prior_revision: Option<u64>,
    ) -> Result<CanvasAnalysis, ProviderError> {
        Ok(OfflineProvider::census(doc, prior_revision))
    }

    fn draft_feedback(&self, dimension: FeedbackDimension, slots: &Slots) -> Result<String, ProviderError> {
        self.feedback
            .render_text(dimension, slots)
            .map_err(|e| ProviderError::MalformedProviderReply(e.to_string()))
    }

    fn draft_helper(&self, hint: &str, goal: Option<&str>) -> Result<Option<HelperDraft>, ProviderError> {
        Ok(self.catalog.resolve(hint, goal).map(|e| HelperDraft {
            label: e.label.clone(),
            svg_body: e.svg_body.clone(),
            scale: e.default_scale,
        }))
    }

    fn transfer_style(&self, doc: &CanvasDocument, style: StyleKind, seed: u64) -> Result<Vec<u8>, ProviderError> {
        stylize(doc, style, seed).map_err(|e| ProviderError::Render(e.to_string()))
    }
}
