//! HTTP client for a remote provider adapter.
//!
//! Wire format: `POST <endpoint>` with JSON body
//! `{"capability", "version", "payload"}` and a bearer token; the reply is
//! `{"status": "ok" | "error", "payload"}`. Replies are cached by the hash of
//! (capability, payload) when a cache directory is configured.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::prompts::PromptSet;
use super::{Capability, Provider, ProviderConfig, ProviderError};
use crate::canvas::{export_raster, CanvasDocument};
use crate::domain::{FeedbackDimension, QuestTask};
use crate::feedback::{AnalysisSource, CanvasAnalysis, Slots};
use crate::quest::{QuestDraft, QuestRequest, TaskDraft};
use crate::scaffold::{HelperDraft, StyleKind};
use crate::text::{content_hash, is_label};

pub const WIRE_VERSION: u32 = 1;
/// Side of the PNG snapshot sent for analysis and styling.
pub const SNAPSHOT_SIZE: u32 = 512;
const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Status(u16),
    Io(String),
}

impl TransportError {
    fn retryable(&self) -> bool {
        match self {
            TransportError::Timeout | TransportError::Io(_) => true,
            TransportError::Status(s) => *s == 429 || *s >= 500,
        }
    }
}

/// One HTTP round trip. Implementations must be safe to share.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, bearer: Option<&str>, body: &[u8]) -> Result<Vec<u8>, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        UreqTransport { agent: config.into() }
    }
}

impl Transport for UreqTransport {
    fn post(&self, url: &str, bearer: Option<&str>, body: &[u8]) -> Result<Vec<u8>, TransportError> {
        let mut request = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = bearer {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.send(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Io(other.to_string()),
        })?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(TransportError::Status(status));
        }
        response.body_mut().read_to_vec().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Io(other.to_string()),
        })
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

#[derive(Clone)]
pub struct RemoteClient {
    endpoint: String,
    token_env: Option<String>,
    retries: u32,
    backoff_base: Duration,
    cache_dir: Option<PathBuf>,
    prompts: PromptSet,
    transport: Arc<dyn Transport>,
    sleep: Sleeper,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient")
            .field("endpoint", &self.endpoint)
            .field("retries", &self.retries)
            .field("cache_dir", &self.cache_dir)
            .finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct Reply {
    status: String,
    #[serde(default)]
    payload: Value,
}

impl RemoteClient {
    pub fn new(config: &ProviderConfig, prompts: PromptSet, transport: Arc<dyn Transport>) -> Result<Self, ProviderError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| ProviderError::NotConfigured("remote endpoint is not set".into()))?;
        Ok(RemoteClient {
            endpoint,
            token_env: config.token_env.clone(),
            retries: config.retries,
            backoff_base: Duration::from_millis(config.backoff_base_ms),
            cache_dir: config.cache_dir.clone(),
            prompts,
            transport,
            sleep: Arc::new(std::thread::sleep),
        })
    }

    /// Replaces the sleep used between retries.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn cache_key(capability: Capability, payload: &Value) -> String {
        let bytes = serde_json::to_vec(payload).expect("json values serialize");
        content_hash(&[capability.name().as_bytes(), &bytes])
    }

    fn bearer(&self) -> Result<Option<String>, ProviderError> {
        match &self.token_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| ProviderError::NotConfigured(format!("environment variable {var} is not set"))),
        }
    }

    /// Sends one capability request, retrying transient failures with
    /// exponential backoff, and returns the reply payload.
    pub fn call_remote(&self, capability: Capability, payload: Value) -> Result<Value, ProviderError> {
        let key = Self::cache_key(capability, &payload);
        let cache_path = self.cache_dir.as_ref().map(|d| d.join(format!("{key}.json")));
        if let Some(bytes) = cache_path.as_ref().and_then(|p| std::fs::read(p).ok()) {
            return parse_reply(&bytes);
        }
        let body = serde_json::to_vec(&json!({
            "capability": capability.name(),
            "version": WIRE_VERSION,
            "payload": payload,
        }))
        .expect("json values serialize");
        let bearer = self.bearer()?;
        let mut attempt = 0;
        let bytes = loop {
            match self.transport.post(&self.endpoint, bearer.as_deref(), &body) {
                Ok(bytes) => break bytes,
                Err(e) if e.retryable() && attempt < self.retries => {
                    (self.sleep)(self.backoff_base * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err(TransportError::Timeout) => return Err(ProviderError::Timeout),
                Err(TransportError::Status(status)) => {
                    return Err(ProviderError::RemoteError { status, message: format!("HTTP {status}") })
                }
                Err(TransportError::Io(msg)) => return Err(ProviderError::Transport(msg)),
            }
        };
        let payload = parse_reply(&bytes)?;
        if let Some(path) = cache_path {
            write_atomically(&path, &bytes)?;
        }
        Ok(payload)
    }
}

fn parse_reply(bytes: &[u8]) -> Result<Value, ProviderError> {
    let reply: Reply = serde_json::from_slice(bytes)
        .map_err(|e| ProviderError::MalformedProviderReply(format!("reply envelope: {e}")))?;
    match reply.status.as_str() {
        "ok" => Ok(reply.payload),
        "error" => Err(ProviderError::RemoteError {
            status: 200,
            message: reply.payload.get("message").and_then(Value::as_str).unwrap_or("error").to_owned(),
        }),
        other => Err(ProviderError::MalformedProviderReply(format!("unknown status `{other}`"))),
    }
}

fn write_atomically(path: &std::path::Path, bytes: &[u8]) -> Result<(), ProviderError> {
    let io = |e: std::io::Error| ProviderError::Transport(format!("cache {}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn field<T: serde::de::DeserializeOwned>(payload: &Value, name: &str) -> Result<T, ProviderError> {
    let value = payload.get(name).cloned().unwrap_or(Value::Null);
    serde_json::from_value(value).map_err(|e| ProviderError::MalformedProviderReply(format!("`{name}`: {e}")))
}

fn snapshot(doc: &CanvasDocument) -> Result<String, ProviderError> {
    let png = export_raster(doc, SNAPSHOT_SIZE, SNAPSHOT_SIZE).map_err(|e| ProviderError::Render(e.to_string()))?;
    Ok(BASE64.encode(png))
}

impl Provider for RemoteClient {
    fn draft_quest(&self, request: &QuestRequest) -> Result<QuestDraft, ProviderError> {
        let length = request.desired_length.map_or("any from 3 to 7".to_owned(), |n| n.to_string());
        let prompt = self.prompts.render(
            Capability::DraftQuest,
            &[("goal", request.goal_text.clone()), ("length", length)],
        )?;
        let payload = self.call_remote(
            Capability::DraftQuest,
            json!({ "prompt": prompt, "goal_text": request.goal_text, "desired_length": request.desired_length }),
        )?;
        let tasks: Vec<TaskDraft> = field(&payload, "tasks")?;
        if tasks.is_empty() {
            return Err(ProviderError::MalformedProviderReply("draft has no tasks".into()));
        }
        Ok(QuestDraft { goal_text: request.goal_text.clone(), tasks })
    }

    fn analyze_canvas(
        &self,
        doc: &CanvasDocument,
        task: Option<&QuestTask>,
        prior_revision: Option<u64>,
    ) -> Result<CanvasAnalysis, ProviderError> {
        let criteria: Vec<Value> = task
            .map(|t| t.criteria.iter().map(|c| json!({ "label": c.label, "min_count": c.min_count })).collect())
            .unwrap_or_default();
        let labels: Vec<&str> = task.map(|t| t.criteria.iter().map(|c| c.label.as_str()).collect()).unwrap_or_default();
        let prompt = self.prompts.render(
            Capability::AnalyzeCanvas,
            &[
                ("task", task.map(|t| t.prompt.clone()).unwrap_or_default()),
                ("labels", labels.join(", ")),
            ],
        )?;
        let payload = self.call_remote(
            Capability::AnalyzeCanvas,
            json!({
                "prompt": prompt,
                "criteria": criteria,
                "revision": doc.revision,
                "image_png_base64": snapshot(doc)?,
            }),
        )?;
        let raw: BTreeMap<String, i64> = field(&payload, "elements")?;
        let mut elements = BTreeMap::new();
        for (label, count) in raw {
            if !is_label(&label) {
                return Err(ProviderError::MalformedProviderReply(format!("bad element label `{label}`")));
            }
            let count = u32::try_from(count).map_err(|_| {
                ProviderError::MalformedProviderReply(format!("count {count} for `{label}` out of range"))
            })?;
            if count > 0 {
                elements.insert(label, count);
            }
        }
        let stroke_count: i64 = field(&payload, "stroke_count")?;
        let stroke_count = u32::try_from(stroke_count)
            .map_err(|_| ProviderError::MalformedProviderReply(format!("stroke_count {stroke_count} out of range")))?;
        Ok(CanvasAnalysis {
            elements,
            stroke_count,
            changed: prior_revision != Some(doc.revision),
            source: AnalysisSource::Remote,
            at_revision: doc.revision,
        })
    }

    fn draft_feedback(&self, dimension: FeedbackDimension, slots: &Slots) -> Result<String, ProviderError> {
        let facts: Vec<String> = slots.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let prompt = self.prompts.render(
            Capability::DraftFeedback,
            &[("dimension", dimension.name().to_owned()), ("slots", facts.join(", "))],
        )?;
        let slot_map: BTreeMap<&str, &str> = slots.iter().collect();
        let payload = self.call_remote(
            Capability::DraftFeedback,
            json!({ "prompt": prompt, "dimension": dimension.name(), "slots": slot_map }),
        )?;
        let text: String = field(&payload, "text")?;
        if text.trim().is_empty() {
            return Err(ProviderError::MalformedProviderReply("empty feedback text".into()));
        }
        Ok(text)
    }

    fn draft_helper(&self, hint: &str, goal: Option<&str>) -> Result<Option<HelperDraft>, ProviderError> {
        let prompt = self.prompts.render(
            Capability::DraftHelper,
            &[("hint", hint.to_owned()), ("goal", goal.unwrap_or("the current topic").to_owned())],
        )?;
        let payload = self.call_remote(Capability::DraftHelper, json!({ "prompt": prompt, "hint": hint, "goal": goal }))?;
        let Some(svg_body) = field::<Option<String>>(&payload, "svg_body")? else {
            return Ok(None);
        };
        let label: Option<String> = field(&payload, "label")?;
        let scale: Option<f64> = field(&payload, "scale")?;
        Ok(Some(HelperDraft {
            label: label.unwrap_or_else(|| hint.to_owned()),
            svg_body,
            scale: scale.unwrap_or(1.0),
        }))
    }

    fn transfer_style(&self, doc: &CanvasDocument, style: StyleKind, seed: u64) -> Result<Vec<u8>, ProviderError> {
        let prompt = self.prompts.render(
            Capability::TransferStyle,
            &[("style", style.name().replace('_', " ")), ("seed", seed.to_string())],
        )?;
        let payload = self.call_remote(
            Capability::TransferStyle,
            json!({ "prompt": prompt, "style": style.name(), "seed": seed, "image_png_base64": snapshot(doc)? }),
        )?;
        let encoded: String = field(&payload, "image_png_base64")?;
        let png = BASE64
            .decode(encoded.as_bytes())
            .map_err(|e| ProviderError::MalformedProviderReply(format!("styled image: {e}")))?;
        if !png.starts_with(PNG_MAGIC) {
            return Err(ProviderError::MalformedProviderReply("styled image is not a PNG".into()));
        }
        Ok(png)
    }
}
