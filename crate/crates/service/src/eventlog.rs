//! Append-only, hash-chained event log, one file per session.
//!
//! Each line is `<hash> <json>\n`. The first line is a [`LogHeader`]; every
//! later line is an [`EventLogRecord`]. A line's hash covers the previous
//! line's hash and the line's own JSON bytes, so a changed, dropped or
//! reordered byte anywhere breaks the chain. Loading folds the records
//! through the reducer, which makes the log the only persisted state.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use sketchquest_core::domain::{reduce, Session, SessionEvent};
use sketchquest_core::text::content_hash;
use sketchquest_core::MonitorPolicy;

pub const LOG_FORMAT: &str = "sketchquest-events";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub session_id: String,
    pub policy: MonitorPolicy,
    pub created_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogRecord {
    pub session_id: String,
    pub seq: u64,
    pub timestamp_ms: u64,
    /// Hash of the preceding line.
    pub prev: String,
    pub event: SessionEvent,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("corrupt event log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("event log {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// State rebuilt from a log.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub header: LogHeader,
    pub session: Session,
    pub records: Vec<EventLogRecord>,
    /// Bytes of a torn final record dropped by [`EventLog::recover`].
    pub dropped_bytes: usize,
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    session_id: String,
    last_hash: String,
    last_seq: u64,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn line_hash(prev: &str, json: &[u8]) -> String {
    content_hash(&[prev.as_bytes(), json])
}

fn encode_line<T: Serialize>(prev: &str, value: &T) -> (String, Vec<u8>) {
    let json = serde_json::to_vec(value).expect("log lines serialize");
    let hash = line_hash(prev, &json);
    let mut line = Vec::with_capacity(hash.len() + json.len() + 2);
    line.extend_from_slice(hash.as_bytes());
    line.push(b' ');
    line.extend_from_slice(&json);
    line.push(b'\n');
    (hash, line)
}

impl EventLog {
    /// Creates a new log holding only the header. Fails if the file exists.
    pub fn create(path: &Path, session_id: &str, policy: MonitorPolicy) -> Result<Self, LogError> {
        let io = |source| LogError::Io { path: path.to_owned(), source };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut file = OpenOptions::new().append(true).create_new(true).open(path).map_err(io)?;
        let header = LogHeader {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            session_id: session_id.into(),
            policy,
            created_ms: now_ms(),
        };
        let (hash, line) = encode_line("", &header);
        file.write_all(&line).and_then(|()| file.sync_data()).map_err(io)?;
        if let Some(dir) = path.parent() {
            File::open(dir).and_then(|d| d.sync_all()).map_err(io)?;
        }
        Ok(EventLog { path: path.to_owned(), file, session_id: session_id.into(), last_hash: hash, last_seq: 0 })
    }

    /// Strict load: any damage, including a torn final record, is
    /// `CorruptLog`.
    pub fn load(path: &Path) -> Result<(Self, Loaded), LogError> {
        Self::open(path, false)
    }

    /// Load that drops a torn final record (a last line without its newline,
    /// as left by a crash mid-append) and truncates it from the file. Damage
    /// anywhere else is still `CorruptLog`.
    pub fn recover(path: &Path) -> Result<(Self, Loaded), LogError> {
        Self::open(path, true)
    }

    fn open(path: &Path, tolerate_tail: bool) -> Result<(Self, Loaded), LogError> {
        let io = |source| LogError::Io { path: path.to_owned(), source };
        let bytes = std::fs::read(path).map_err(io)?;
        let (loaded, last_hash, good_len) = parse(&bytes, tolerate_tail)?;
        let file = OpenOptions::new().append(true).open(path).map_err(io)?;
        if good_len < bytes.len() {
            file.set_len(good_len as u64).and_then(|()| file.sync_all()).map_err(io)?;
        }
        let log = EventLog {
            path: path.to_owned(),
            file,
            session_id: loaded.header.session_id.clone(),
            last_hash,
            last_seq: loaded.records.last().map_or(0, |r| r.seq),
        };
        Ok((log, loaded))
    }

    /// Appends one event and syncs it to disk before returning.
    pub fn append(&mut self, event: &SessionEvent) -> Result<EventLogRecord, LogError> {
        let record = EventLogRecord {
            session_id: self.session_id.clone(),
            seq: event.seq,
            timestamp_ms: now_ms(),
            prev: self.last_hash.clone(),
            event: event.clone(),
        };
        let (hash, line) = encode_line(&self.last_hash, &record);
        let io = |source| LogError::Io { path: self.path.clone(), source };
        self.file.write_all(&line).and_then(|()| self.file.sync_data()).map_err(io)?;
        self.last_hash = hash;
        self.last_seq = event.seq;
        Ok(record)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }
}

/// Checks one line against the chain and advances `prev`; returns its JSON.
fn verify(number: usize, line: &[u8], prev: &mut String) -> Result<Vec<u8>, LogError> {
    let corrupt = |reason: &str| LogError::CorruptLog { line: number, reason: reason.into() };
    let split = line.iter().position(|b| *b == b' ').ok_or_else(|| corrupt("no hash"))?;
    let (hash, json) = (&line[..split], &line[split + 1..]);
    let expected = line_hash(prev, json);
    if hash != expected.as_bytes() {
        return Err(corrupt("hash chain mismatch"));
    }
    *prev = expected;
    Ok(json.to_vec())
}

/// Parses and folds a whole log. Returns the loaded state, the hash of the
/// last good line and the byte length of the good prefix.
pub fn parse(bytes: &[u8], tolerate_tail: bool) -> Result<(Loaded, String, usize), LogError> {
    let corrupt = |line: usize, reason: String| LogError::CorruptLog { line, reason };
    let complete_len = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    let dropped_bytes = bytes.len() - complete_len;
    let mut lines: Vec<&[u8]> = bytes[..complete_len].split(|b| *b == b'\n').collect();
    lines.pop(); // empty piece after the final newline
    if dropped_bytes > 0 && !tolerate_tail {
        return Err(corrupt(lines.len() + 1, "torn final record".into()));
    }
    let Some((first, rest)) = lines.split_first() else {
        return Err(corrupt(1, "missing header".into()));
    };

    let mut prev = String::new();
    let header: LogHeader = serde_json::from_slice(&verify(1, first, &mut prev)?).map_err(|e| corrupt(1, e.to_string()))?;
    if header.format != LOG_FORMAT || header.version != LOG_VERSION {
        return Err(corrupt(1, format!("unsupported log {} v{}", header.format, header.version)));
    }
    let mut session = Session::new(header.session_id.clone(), header.policy);
    let mut records = Vec::with_capacity(rest.len());
    for (i, line) in rest.iter().enumerate() {
        let number = i + 2;
        let expected_prev = prev.clone();
        let json = verify(number, line, &mut prev)?;
        let record: EventLogRecord = serde_json::from_slice(&json).map_err(|e| corrupt(number, e.to_string()))?;
        if record.session_id != header.session_id {
            return Err(corrupt(number, format!("record for session {}", record.session_id)));
        }
        if record.prev != expected_prev {
            return Err(corrupt(number, "predecessor hash mismatch".into()));
        }
        if record.seq != i as u64 + 1 || record.event.seq != record.seq {
            return Err(corrupt(number, format!("seq {} out of order", record.seq)));
        }
        session = reduce(&session, &record.event)
            .map_err(|e| corrupt(number, format!("event rejected on replay: {e}")))?
            .session;
        records.push(record);
    }
    let loaded = Loaded { header, session, records, dropped_bytes };
    Ok((loaded, prev, complete_len))
}
