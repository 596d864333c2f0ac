//! The five AI capabilities behind one interface, with a deterministic
//! offline provider, a remote HTTP client and a gateway that routes between
//! them.

mod offline;
pub mod prompts;
pub mod remote;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canvas::CanvasDocument;
use crate::domain::{FeedbackDimension, QuestTask};
use crate::feedback::{CanvasAnalysis, Slots};
use crate::quest::{repair_draft, validate_quest, QuestDraft, QuestRequest};
use crate::scaffold::{sanitize_svg, HelperDraft, StyleKind};

pub use offline::OfflineProvider;
pub use prompts::PromptSet;
pub use remote::{RemoteClient, Transport, TransportError, UreqTransport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    DraftQuest,
    AnalyzeCanvas,
    DraftFeedback,
    DraftHelper,
    TransferStyle,
}

impl Capability {
    pub const ALL: [Capability; 5] = [
        Capability::DraftQuest,
        Capability::AnalyzeCanvas,
        Capability::DraftFeedback,
        Capability::DraftHelper,
        Capability::TransferStyle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Capability::DraftQuest => "draft_quest",
            Capability::AnalyzeCanvas => "analyze_canvas",
            Capability::DraftFeedback => "draft_feedback",
            Capability::DraftHelper => "draft_helper",
            Capability::TransferStyle => "transfer_style",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("provider timed out")]
    Timeout,
    #[error("remote provider error (status {status}): {message}")]
    RemoteError { status: u16, message: String },
    #[error("provider transport: {0}")]
    Transport(String),
    #[error("malformed provider reply: {0}")]
    MalformedProviderReply(String),
    #[error("provider not configured: {0}")]
    NotConfigured(String),
    #[error("rendering failed: {0}")]
    Render(String),
}

/// Backend capabilities. Offline implementations are pure functions of their
/// arguments.
pub trait Provider: Send + Sync {
    fn draft_quest(&self, request: &QuestRequest) -> Result<QuestDraft, ProviderError>;

    /// `prior_revision` is the revision of the previous analysis, used to
    /// fill `changed`.
    fn analyze_canvas(
        &self,
        doc: &CanvasDocument,
        task: Option<&QuestTask>,
        prior_revision: Option<u64>,
    ) -> Result<CanvasAnalysis, ProviderError>;

    fn draft_feedback(&self, dimension: FeedbackDimension, slots: &Slots) -> Result<String, ProviderError>;

    /// `None` when the provider has nothing for the hint.
    fn draft_helper(&self, hint: &str, goal: Option<&str>) -> Result<Option<HelperDraft>, ProviderError>;

    /// PNG bytes.
    fn transfer_style(&self, doc: &CanvasDocument, style: StyleKind, seed: u64) -> Result<Vec<u8>, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    #[default]
    Offline,
    Remote,
    RemoteWithOfflineFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
    /// First retry delay; later retries double it.
    pub backoff_base_ms: u64,
    pub cache_dir: Option<PathBuf>,
    /// Directory of `<capability>.<version>.txt` prompt files; the shipped
    /// prompts are used when absent.
    pub prompt_dir: Option<PathBuf>,
    pub prompt_version: String,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            mode: ProviderMode::Offline,
            endpoint: None,
            token_env: None,
            timeout_secs: 20,
            retries: 2,
            backoff_base_ms: 1000,
            cache_dir: None,
            prompt_dir: None,
            prompt_version: prompts::PROMPT_VERSION.into(),
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.mode != ProviderMode::Offline {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err("remote provider modes need an endpoint".into());
            }
            if self.token_env.as_deref().is_none_or(str::is_empty) {
                return Err("remote provider modes need token_env".into());
            }
        }
        if self.timeout_secs == 0 {
            return Err("timeout_secs must be positive".into());
        }
        Ok(())
    }

    pub fn prompts(&self) -> Result<PromptSet, String> {
        match &self.prompt_dir {
            Some(dir) => PromptSet::load_dir(dir, &self.prompt_version),
            None => Ok(PromptSet::default()),
        }
    }
}

/// Routes each capability according to the configured mode. With
/// `RemoteWithOfflineFallback`, any remote failure (or remote output that
/// cannot pass its validator) is answered by the offline provider instead.
#[derive(Debug, Clone)]
pub struct Gateway {
    mode: ProviderMode,
    offline: OfflineProvider,
    remote: Option<RemoteClient>,
}

impl Gateway {
    pub fn offline(offline: OfflineProvider) -> Self {
        Gateway { mode: ProviderMode::Offline, offline, remote: None }
    }

    pub fn with_remote(mode: ProviderMode, offline: OfflineProvider, remote: RemoteClient) -> Self {
        Gateway { mode, offline, remote: Some(remote) }
    }

    /// Builds the gateway for `config`, using HTTP for remote modes.
    pub fn from_config(config: &ProviderConfig, offline: OfflineProvider) -> Result<Self, ProviderError> {
        if config.mode == ProviderMode::Offline {
            return Ok(Gateway::offline(offline));
        }
        config.validate().map_err(ProviderError::NotConfigured)?;
        let prompts = config.prompts().map_err(ProviderError::NotConfigured)?;
        let transport = Arc::new(UreqTransport::new(Duration::from_secs(config.timeout_secs)));
        let remote = RemoteClient::new(config, prompts, transport)?;
        Ok(Gateway::with_remote(config.mode, offline, remote))
    }

    pub fn mode(&self) -> ProviderMode {
        self.mode
    }

    pub fn offline_provider(&self) -> &OfflineProvider {
        &self.offline
    }

    fn route<T>(
        &self,
        remote: impl FnOnce(&RemoteClient) -> Result<T, ProviderError>,
        offline: impl FnOnce(&OfflineProvider) -> Result<T, ProviderError>,
    ) -> Result<T, ProviderError> {
        match (self.mode, &self.remote) {
            (ProviderMode::Offline, _) | (_, None) => offline(&self.offline),
            (ProviderMode::Remote, Some(r)) => remote(r),
            (ProviderMode::RemoteWithOfflineFallback, Some(r)) => remote(r).or_else(|_| offline(&self.offline)),
        }
    }
}

impl Provider for Gateway {
    fn draft_quest(&self, request: &QuestRequest) -> Result<QuestDraft, ProviderError> {
        let fallback = self.mode == ProviderMode::RemoteWithOfflineFallback;
        self.route(
            |r| {
                let draft = r.draft_quest(request)?;
                let usable = validate_quest(&draft).is_ok() || validate_quest(&repair_draft(&draft)).is_ok();
                if fallback && !usable {
                    return Err(ProviderError::MalformedProviderReply("unrepairable quest draft".into()));
                }
                Ok(draft)
            },
            |o| o.draft_quest(request),
        )
    }

    fn analyze_canvas(
        &self,
        doc: &CanvasDocument,
        task: Option<&QuestTask>,
        prior_revision: Option<u64>,
    ) -> Result<CanvasAnalysis, ProviderError> {
        self.route(
            |r| r.analyze_canvas(doc, task, prior_revision),
            |o| o.analyze_canvas(doc, task, prior_revision),
        )
    }

    fn draft_feedback(&self, dimension: FeedbackDimension, slots: &Slots) -> Result<String, ProviderError> {
        self.route(|r| r.draft_feedback(dimension, slots), |o| o.draft_feedback(dimension, slots))
    }

    fn draft_helper(&self, hint: &str, goal: Option<&str>) -> Result<Option<HelperDraft>, ProviderError> {
        let fallback = self.mode == ProviderMode::RemoteWithOfflineFallback;
        self.route(
            |r| {
                let draft = r.draft_helper(hint, goal)?;
                if fallback && draft.as_ref().is_none_or(|d| sanitize_svg(&d.svg_body).is_err()) {
                    return Err(ProviderError::MalformedProviderReply("no usable helper markup".into()));
                }
                Ok(draft)
            },
            |o| o.draft_helper(hint, goal),
        )
    }

    fn transfer_style(&self, doc: &CanvasDocument, style: StyleKind, seed: u64) -> Result<Vec<u8>, ProviderError> {
        self.route(|r| r.transfer_style(doc, style, seed), |o| o.transfer_style(doc, style, seed))
    }
}
