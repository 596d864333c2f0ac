//! Test harness: an offline service on an ephemeral port and a small JSON
//! client.

#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::Value;
use sketchquest_core::domain::{EventKind, SessionEvent};
use sketchquest_core::feedback::FeedbackTable;
use sketchquest_core::{MonitorPolicy, OfflineProvider};
use sketchquest_service::api::router;
use sketchquest_service::sessions::{Registry, Services};

pub struct Server {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    agent: ureq::Agent,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

pub fn services(data_dir: &Path) -> Services {
    Services {
        provider: Arc::new(OfflineProvider::default()),
        table: Arc::new(FeedbackTable::default()),
        policy: MonitorPolicy::default(),
        data_dir: data_dir.to_owned(),
        ticks: false,
    }
}

impl Server {
    /// Starts an offline service over `data_dir`.
    pub fn start(data_dir: &Path) -> Server {
        let registry = Arc::new(Registry::new(services(data_dir)));
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (shutdown, stop) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, router(registry))
                    .with_graceful_shutdown(async {
                        let _ = stop.await;
                    })
                    .await
                    .unwrap();
            });
        });
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Server {
            addr: addr_rx.recv().unwrap(),
            data_dir: data_dir.to_owned(),
            agent,
            shutdown: Some(shutdown),
            thread: Some(thread),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let mut resp = self.agent.post(&self.url(path)).send_json(body).unwrap();
        let status = resp.status().as_u16();
        (status, resp.body_mut().read_json().unwrap_or(Value::Null))
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let mut resp = self.agent.get(&self.url(path)).call().unwrap();
        let status = resp.status().as_u16();
        (status, resp.body_mut().read_json().unwrap_or(Value::Null))
    }

    pub fn get_bytes(&self, path: &str) -> (u16, String, Vec<u8>) {
        let mut resp = self.agent.get(&self.url(path)).call().unwrap();
        let status = resp.status().as_u16();
        let kind = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_owned();
        (status, kind, resp.body_mut().read_to_vec().unwrap())
    }

    pub fn raw_post(&self, path: &str, body: &str) -> u16 {
        self.agent
            .post(&self.url(path))
            .header("content-type", "application/json")
            .send(body)
            .unwrap()
            .status()
            .as_u16()
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.halt();
    }
}

pub const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

/// A short tagged stroke.
pub fn stroke(id: &str, label: &str) -> Value {
    serde_json::json!({
        "stroke_id": id,
        "points": [{"x": 0.3, "y": 0.3}, {"x": 0.4, "y": 0.35}],
        "color": "#3d405b",
        "width": 0.01,
        "element_tag": label,
    })
}

/// Draws whatever the current task still lacks, checks, and completes it.
/// Returns the cards of the check and of the completion.
pub fn finish_current_task(server: &Server, id: &str, strokes: &mut usize) -> (Value, Value) {
    let (_, view) = server.get(&format!("/sessions/{id}"));
    let task_id = view["current_task_id"].as_str().unwrap().to_owned();
    let task = view["quest"]["tasks"].as_array().unwrap().iter().find(|t| t["task_id"] == task_id.as_str()).unwrap();
    let census = sketchquest_core::CanvasDocument::element_census(
        &serde_json::from_value(view["canvas"].clone()).unwrap(),
    );
    for c in task["criteria"].as_array().unwrap() {
        let label = c["label"].as_str().unwrap();
        let have = census.get(label).copied().unwrap_or(0);
        for _ in have..c["min_count"].as_u64().unwrap() as u32 {
            *strokes += 1;
            let (status, _) = server.post(
                &format!("/sessions/{id}/strokes"),
                serde_json::json!({ "stroke": stroke(&format!("s{strokes}"), label) }),
            );
            assert_eq!(status, 200);
        }
    }
    let (status, check) = server.post(&format!("/sessions/{id}/check"), Value::Null);
    assert_eq!(status, 200, "{check}");
    let (status, done) = server.post(&format!("/sessions/{id}/tasks/{task_id}/complete"), Value::Null);
    assert_eq!(status, 200, "{done}");
    (check, done)
}

/// Events of a session's log, read with the strict loader.
pub fn logged_events(data_dir: &Path, id: &str) -> Vec<SessionEvent> {
    let path = data_dir.join("sessions").join(id).join("events.log");
    let (_, loaded) = sketchquest_service::eventlog::EventLog::load(&path).unwrap();
    loaded.records.into_iter().map(|r| r.event).collect()
}

pub fn count_kind(events: &[SessionEvent], f: impl Fn(&EventKind) -> bool) -> usize {
    events.iter().filter(|e| f(&e.kind)).count()
}
