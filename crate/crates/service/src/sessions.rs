//! Session registry and per-session actors.
//!
//! Each live session is owned by one tokio task that holds the session
//! state and its event log. Commands arrive over a channel and are handled
//! one at a time: an event is reduced, appended to the log (synced), and
//! only then becomes the current state. Effects run on the blocking pool
//! against a snapshot and come back as follow-up events through the same
//! path. Readers get the latest state from a watch channel without
//! touching the actor.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use tokio::sync::{mpsc, oneshot, watch, Mutex};
use tokio::time::{Instant, MissedTickBehavior};

use sketchquest_core::canvas::{HelperObject, Point};
use sketchquest_core::domain::{EventKind, FeedbackCard, Session, SessionEvent, SessionPhase};
use sketchquest_core::driver::{fulfil, Artifact};
use sketchquest_core::feedback::FeedbackTable;
use sketchquest_core::scaffold::request_helper;
use sketchquest_core::{MonitorPolicy, Provider};

use crate::error::ApiError;
use crate::eventlog::{EventLog, LogError};

const LOG_FILE: &str = "events.log";

/// Shared dependencies of every session.
pub struct Services {
    pub provider: Arc<dyn Provider>,
    pub table: Arc<FeedbackTable>,
    pub policy: MonitorPolicy,
    pub data_dir: PathBuf,
    /// Emit monitor ticks while a quest is active.
    pub ticks: bool,
}

impl Services {
    pub fn session_dir(&self, session_id: &str) -> PathBuf {
        self.data_dir.join("sessions").join(session_id)
    }
}

/// What one command led to.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub session: Arc<Session>,
    /// Events applied by this command, in order.
    pub events: Vec<SessionEvent>,
    /// Cards added to the feedback log by this command.
    pub cards: Vec<FeedbackCard>,
    /// Styled images stored by this command.
    pub artifacts: Vec<String>,
}

type Reply<T> = oneshot::Sender<Result<T, ApiError>>;

enum Command {
    Submit { kind: EventKind, reply: Reply<Outcome> },
    RequestHelper { hint: String, reply: Reply<HelperObject> },
    Place { helper_id: String, position: Point, reply: Reply<Outcome> },
}

#[derive(Clone)]
pub struct SessionHandle {
    tx: mpsc::Sender<Command>,
    view: watch::Receiver<Arc<Session>>,
    dir: PathBuf,
}

fn gone() -> ApiError {
    ApiError::internal("session actor stopped")
}

impl SessionHandle {
    pub fn snapshot(&self) -> Arc<Session> {
        self.view.borrow().clone()
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Where a stored styled image lives; `None` for references the session
    /// does not know.
    pub fn artifact_path(&self, artifact_ref: &str) -> Option<PathBuf> {
        let session = self.snapshot();
        session
            .artifacts
            .iter()
            .any(|a| a.artifact_ref == artifact_ref)
            .then(|| artifact_file(&self.dir, artifact_ref))
    }

    async fn call<T>(&self, make: impl FnOnce(Reply<T>) -> Command) -> Result<T, ApiError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).await.map_err(|_| gone())?;
        rx.await.map_err(|_| gone())?
    }

    pub async fn submit(&self, kind: EventKind) -> Result<Outcome, ApiError> {
        self.call(|reply| Command::Submit { kind, reply }).await
    }

    /// Produces a helper that is held until placed.
    pub async fn request_helper(&self, hint: String) -> Result<HelperObject, ApiError> {
        self.call(|reply| Command::RequestHelper { hint, reply }).await
    }

    /// Places a requested helper, or moves one already on the canvas.
    pub async fn place_helper(&self, helper_id: String, position: Point) -> Result<Outcome, ApiError> {
        self.call(|reply| Command::Place { helper_id, position, reply }).await
    }
}

fn artifact_file(dir: &Path, artifact_ref: &str) -> PathBuf {
    dir.join("artifacts").join(format!("{artifact_ref}.png"))
}

pub struct Registry {
    services: Arc<Services>,
    sessions: Mutex<HashMap<String, SessionHandle>>,
}

impl Registry {
    pub fn new(services: Services) -> Self {
        Registry { services: Arc::new(services), sessions: Mutex::new(HashMap::new()) }
    }

    pub fn services(&self) -> &Services {
        &self.services
    }

    /// Starts a session for `goal` and generates its quest.
    pub async fn create(&self, goal: &str) -> Result<(SessionHandle, Outcome), ApiError> {
        if goal.trim().is_empty() {
            return Err(ApiError::invalid("goal is empty"));
        }
        let session_id = uuid::Uuid::new_v4().to_string();
        let dir = self.services.session_dir(&session_id);
        let log = EventLog::create(&dir.join(LOG_FILE), &session_id, self.services.policy)?;
        let session = Session::new(session_id.clone(), self.services.policy);
        let handle = spawn(self.services.clone(), session, log, dir, 0);
        self.sessions.lock().await.insert(session_id, handle.clone());
        let outcome = handle.submit(EventKind::GoalSubmitted { goal: goal.to_owned() }).await?;
        Ok((handle, outcome))
    }

    /// The live session, restored from its log on first access.
    pub async fn get(&self, session_id: &str) -> Result<SessionHandle, ApiError> {
        let mut sessions = self.sessions.lock().await;
        if let Some(handle) = sessions.get(session_id) {
            return Ok(handle.clone());
        }
        let valid_id = !session_id.is_empty() && session_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        let dir = self.services.session_dir(session_id);
        let path = dir.join(LOG_FILE);
        if !valid_id || !path.is_file() {
            return Err(ApiError::not_found("session", session_id));
        }
        let (log, loaded) = EventLog::recover(&path)?;
        if loaded.dropped_bytes > 0 {
            tracing::warn!(session_id, bytes = loaded.dropped_bytes, "dropped torn record from event log");
        }
        let last_tick = loaded
            .records
            .iter()
            .filter_map(|r| match r.event.kind {
                EventKind::TickElapsed { tick } => Some(tick),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let handle = spawn(self.services.clone(), loaded.session, log, dir, last_tick);
        sessions.insert(session_id.to_owned(), handle.clone());
        Ok(handle)
    }
}

fn spawn(services: Arc<Services>, session: Session, log: EventLog, dir: PathBuf, last_tick: u64) -> SessionHandle {
    let (tx, rx) = mpsc::channel(64);
    let (view_tx, view) = watch::channel(Arc::new(session.clone()));
    let interval = services.policy.tick_interval_secs;
    let helper_no = session
        .canvas
        .helpers
        .iter()
        .filter_map(|h| h.helper_id.strip_prefix('h')?.split_once('-')?.0.parse::<u64>().ok())
        .max()
        .unwrap_or(0);
    let actor = Actor {
        services,
        session,
        log,
        dir: dir.clone(),
        view: view_tx,
        pending: BTreeMap::new(),
        helper_no,
        next_tick: (last_tick / interval + 1) * interval,
    };
    tokio::spawn(actor.run(rx));
    SessionHandle { tx, view, dir }
}

struct Actor {
    services: Arc<Services>,
    session: Session,
    log: EventLog,
    dir: PathBuf,
    view: watch::Sender<Arc<Session>>,
    /// Requested helpers not yet placed, by id.
    pending: BTreeMap<String, HelperObject>,
    helper_no: u64,
    next_tick: u64,
}

impl Actor {
    async fn run(mut self, mut rx: mpsc::Receiver<Command>) {
        let period = Duration::from_secs(self.services.policy.tick_interval_secs);
        let mut ticker = tokio::time::interval_at(Instant::now() + period, period);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
        let mut was_ticking = false;
        loop {
            let ticking = self.services.ticks && self.session.phase == SessionPhase::QuestActive;
            if ticking && !was_ticking {
                ticker.reset();
            }
            was_ticking = ticking;
            tokio::select! {
                command = rx.recv() => match command {
                    Some(command) => self.handle(command).await,
                    None => break,
                },
                _ = ticker.tick(), if ticking => self.tick().await,
            }
        }
    }

    async fn handle(&mut self, command: Command) {
        match command {
            Command::Submit { kind, reply } => {
                let _ = reply.send(self.step(kind).await);
            }
            Command::RequestHelper { hint, reply } => {
                let _ = reply.send(self.request_helper(hint).await);
            }
            Command::Place { helper_id, position, reply } => {
                let _ = reply.send(self.place(helper_id, position).await);
            }
        }
    }

    async fn tick(&mut self) {
        let tick = self.next_tick;
        self.next_tick += self.services.policy.tick_interval_secs;
        if let Err(e) = self.step(EventKind::TickElapsed { tick }).await {
            tracing::warn!(session_id = %self.session.session_id, tick, error = %e, "monitor tick failed");
        }
    }

    /// Reduces, logs, then publishes one event; returns its effects.
    fn commit(&mut self, kind: EventKind, outcome: &mut Outcome) -> Result<Vec<sketchquest_core::Effect>, ApiError> {
        let event = self.session.next_event(kind);
        let transition = sketchquest_core::reduce(&self.session, &event)?;
        self.log.append(&event)?;
        let added = transition.session.feedback_log.len() - self.session.feedback_log.len();
        self.session = transition.session;
        outcome.cards.extend_from_slice(&self.session.feedback_log[self.session.feedback_log.len() - added..]);
        outcome.events.push(event);
        self.view.send_replace(Arc::new(self.session.clone()));
        Ok(transition.effects)
    }

    async fn step(&mut self, kind: EventKind) -> Result<Outcome, ApiError> {
        let mut outcome = Outcome {
            session: Arc::new(Session::new("", self.services.policy)),
            events: Vec::new(),
            cards: Vec::new(),
            artifacts: Vec::new(),
        };
        let mut queue: VecDeque<_> = self.commit(kind, &mut outcome)?.into();
        while let Some(effect) = queue.pop_front() {
            let snapshot = self.session.clone();
            let services = self.services.clone();
            let fulfilled = tokio::task::spawn_blocking(move || {
                fulfil(&snapshot, &effect, services.provider.as_ref(), &services.table)
            })
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .inspect_err(|e| tracing::warn!(session_id = %self.session.session_id, error = %e, "effect failed"))?;
            if let Some(artifact) = &fulfilled.artifact {
                self.store(artifact)?;
                outcome.artifacts.push(artifact.artifact_ref.clone());
            }
            queue.extend(self.commit(fulfilled.event, &mut outcome)?);
        }
        outcome.session = Arc::new(self.session.clone());
        Ok(outcome)
    }

    fn store(&self, artifact: &Artifact) -> Result<(), ApiError> {
        let path = artifact_file(&self.dir, &artifact.artifact_ref);
        let io = |e: std::io::Error| ApiError::from(LogError::Io { path: path.clone(), source: e });
        std::fs::create_dir_all(path.parent().expect("artifact dir")).map_err(io)?;
        let tmp = path.with_extension("png.tmp");
        std::fs::write(&tmp, &artifact.png).map_err(io)?;
        std::fs::rename(&tmp, &path).map_err(io)
    }

    async fn request_helper(&mut self, hint: String) -> Result<HelperObject, ApiError> {
        if hint.trim().is_empty() {
            return Err(ApiError::invalid("hint is empty"));
        }
        self.helper_no += 1;
        let snapshot = self.session.clone();
        let services = self.services.clone();
        let no = self.helper_no;
        let helper = tokio::task::spawn_blocking(move || {
            request_helper(&snapshot, &hint, services.provider.as_ref(), no)
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
        self.pending.insert(helper.helper_id.clone(), helper.clone());
        Ok(helper)
    }

    async fn place(&mut self, helper_id: String, position: Point) -> Result<Outcome, ApiError> {
        let mut helper = match self.pending.get(&helper_id) {
            Some(h) => h.clone(),
            None => self
                .session
                .canvas
                .helper(&helper_id)
                .cloned()
                .ok_or_else(|| ApiError::not_found("helper", &helper_id))?,
        };
        helper.position = position;
        let outcome = self.step(EventKind::HelperPlaced { helper }).await?;
        self.pending.remove(&helper_id);
        Ok(outcome)
    }
}
