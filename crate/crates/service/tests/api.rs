mod common;

use serde_json::{json, Value};

use common::{finish_current_task, logged_events, Server, PNG_MAGIC};
use sketchquest_core::domain::EventKind;

fn create(server: &Server, goal: &str) -> Value {
    let (status, view) = server.post("/sessions", json!({ "goal": goal }));
    assert_eq!(status, 201, "{view}");
    view
}

#[test]
fn quest_through_style_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let view = create(&server, "photosynthesis");
    let id = view["session_id"].as_str().unwrap().to_owned();
    assert_eq!(view["phase"], "quest_active");
    let total = view["progress"]["total"].as_u64().unwrap();

    let (status, body) = server.post(&format!("/sessions/{id}/style"), json!({ "style": "anime", "seed": 1 }));
    assert_eq!((status, body["error"].as_str()), (409, Some("illegal_transition")), "{body}");

    let mut strokes = 0;
    for done in 1..=total {
        let (check, completed) = finish_current_task(&server, &id, &mut strokes);
        assert!(!check["cards"].as_array().unwrap().is_empty());
        assert!(!completed["cards"].as_array().unwrap().is_empty());
        assert_eq!(completed["session"]["gems"]["gem_count"].as_u64(), Some(done));
    }
    let (_, view) = server.get(&format!("/sessions/{id}"));
    assert_eq!(view["phase"], "all_complete");
    assert_eq!(view["progress"], json!({ "done": total, "total": total }));

    let (status, styled) = server.post(&format!("/sessions/{id}/style"), json!({ "style": "oil_painting", "seed": 9 }));
    assert_eq!(status, 200, "{styled}");
    assert_eq!(styled["session"]["phase"], "style_applied");
    let (status, kind, png) = server.get_bytes(styled["url"].as_str().unwrap());
    assert_eq!((status, kind.as_str()), (200, "image/png"));
    assert!(png.starts_with(PNG_MAGIC));

    let (status, kind, png) = server.get_bytes(&format!("/sessions/{id}/canvas.png?width=96&height=64"));
    assert_eq!((status, kind.as_str()), (200, "image/png"));
    assert!(png.starts_with(PNG_MAGIC));
    assert_eq!(server.get_bytes(&format!("/sessions/{id}/canvas.png?width=0")).0, 422);
    assert_eq!(server.get_bytes(&format!("/sessions/{id}/style/nothing-here")).0, 404);
}

#[test]
fn repeated_completion_is_a_conflict_without_change() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let id = create(&server, "cell structure")["session_id"].as_str().unwrap().to_owned();
    let mut strokes = 0;
    let (_, completed) = finish_current_task(&server, &id, &mut strokes);
    let first = completed["session"]["quest"]["tasks"][0]["task_id"].as_str().unwrap().to_owned();
    let (_, before) = server.get(&format!("/sessions/{id}"));
    let (status, body) = server.post(&format!("/sessions/{id}/tasks/{first}/complete"), Value::Null);
    assert_eq!(status, 409, "{body}");
    let (_, after) = server.get(&format!("/sessions/{id}"));
    assert_eq!(before, after);
    assert_eq!(logged_events(dir.path(), &id).len() as u64, after["event_seq"].as_u64().unwrap());
}

#[test]
fn unknown_things_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    assert_eq!(server.get("/sessions/no-such-session").0, 404);
    assert_eq!(server.get("/sessions/..%2F..%2Fetc").0, 404);
    assert_eq!(server.post("/sessions/nope/check", Value::Null).0, 404);
    assert_eq!(server.post("/sessions", json!({ "goal": "   " })).0, 422);
    assert_eq!(server.raw_post("/sessions", "{not json"), 422);

    let id = create(&server, "the water cycle")["session_id"].as_str().unwrap().to_owned();
    assert_eq!(server.post(&format!("/sessions/{id}/tasks/nope/complete"), Value::Null).0, 404);
    let (_, view) = server.get(&format!("/sessions/{id}"));
    let current = view["current_task_id"].as_str().unwrap();
    let (status, body) = server.post(&format!("/sessions/{id}/tasks/{current}/complete"), Value::Null);
    assert_eq!(status, 409, "{body}");
    let later = view["quest"]["tasks"][1]["task_id"].as_str().unwrap();
    assert_eq!(server.post(&format!("/sessions/{id}/tasks/{later}/complete"), Value::Null).0, 409);
    let bad_stroke = json!({ "stroke": { "stroke_id": "x", "points": [], "color": "#000000", "width": 0.01 } });
    assert_eq!(server.post(&format!("/sessions/{id}/strokes"), bad_stroke).0, 422);
    assert_eq!(server.post(&format!("/sessions/{id}/style"), json!({ "style": "sepia" })).0, 422);
}

#[test]
fn helpers_are_placed_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let id = create(&server, "photosynthesis")["session_id"].as_str().unwrap().to_owned();

    let (status, reply) = server.post(&format!("/sessions/{id}/helpers"), json!({ "hint": "sun" }));
    assert_eq!(status, 200, "{reply}");
    let helper_id = reply["helper"]["helper_id"].as_str().unwrap().to_owned();
    let (_, view) = server.get(&format!("/sessions/{id}"));
    assert!(view["canvas"]["helpers"].as_array().unwrap().is_empty());

    let place = |hid: &str, x: f64| {
        server.post(&format!("/sessions/{id}/helpers/{hid}/place"), json!({ "position": { "x": x, "y": 0.2 } }))
    };
    let (status, view) = place(&helper_id, 0.25);
    assert_eq!(status, 200, "{view}");
    assert_eq!(view["canvas"]["helpers"][0]["label"], "sun");
    let (status, view) = place(&helper_id, 0.75);
    assert_eq!(status, 200);
    assert_eq!(view["canvas"]["helpers"].as_array().unwrap().len(), 1);
    assert_eq!(view["canvas"]["helpers"][0]["position"]["x"], 0.75);
    assert_eq!(place("h99-ghost", 0.5).0, 404);
    assert_eq!(place(&helper_id, 7.0).0, 422);

    assert_eq!(server.post(&format!("/sessions/{id}/helpers"), json!({ "hint": "spaceship" })).0, 404);
    assert_eq!(server.post(&format!("/sessions/{id}/helpers"), json!({ "hint": "" })).0, 422);
    let (status, second) = server.post(&format!("/sessions/{id}/helpers"), json!({ "hint": "leaf" }));
    assert_eq!(status, 200);
    assert_ne!(second["helper"]["helper_id"].as_str().unwrap(), helper_id);

    let events = logged_events(dir.path(), &id);
    let placed = common::count_kind(&events, |k| matches!(k, EventKind::HelperPlaced { .. }));
    assert_eq!(placed, 2);
}

#[test]
fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let id = create(&server, "the water cycle")["session_id"].as_str().unwrap().to_owned();
    let mut strokes = 0;
    finish_current_task(&server, &id, &mut strokes);
    let (_, helper) = server.post(&format!("/sessions/{id}/helpers"), json!({ "hint": "cloud" }));
    let hid = helper["helper"]["helper_id"].as_str().unwrap().to_owned();
    server.post(&format!("/sessions/{id}/helpers/{hid}/place"), json!({ "position": { "x": 0.5, "y": 0.1 } }));
    let (_, before) = server.get(&format!("/sessions/{id}"));
    server.stop();

    let server = Server::start(dir.path());
    let (status, after) = server.get(&format!("/sessions/{id}"));
    assert_eq!(status, 200);
    assert_eq!(before, after);
    // helper ids keep counting after a restart
    let (_, next) = server.post(&format!("/sessions/{id}/helpers"), json!({ "hint": "rain" }));
    assert!(next["helper"]["helper_id"].as_str().unwrap().starts_with("h2-"), "{next}");
    finish_current_task(&server, &id, &mut strokes);
    let (_, view) = server.get(&format!("/sessions/{id}"));
    assert_eq!(view["gems"]["gem_count"], 2);
}

#[test]
fn concurrent_requests_follow_log_order() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let id = create(&server, "cell structure")["session_id"].as_str().unwrap().to_owned();
    std::thread::scope(|scope| {
        for t in 0..8 {
            let (server, id) = (&server, &id);
            scope.spawn(move || {
                for i in 0..10 {
                    let body = json!({ "stroke": common::stroke(&format!("t{t}-{i}"), "membrane") });
                    let (status, view) = server.post(&format!("/sessions/{id}/strokes"), body);
                    assert_eq!(status, 200);
                    // the reply already reflects this stroke
                    let ids: Vec<&str> =
                        view["canvas"]["strokes"].as_array().unwrap().iter().map(|s| s["stroke_id"].as_str().unwrap()).collect();
                    assert!(ids.contains(&format!("t{t}-{i}").as_str()));
                    if i % 3 == 0 {
                        assert_eq!(server.post(&format!("/sessions/{id}/check"), Value::Null).0, 200);
                    }
                }
            });
        }
    });
    let (_, view) = server.get(&format!("/sessions/{id}"));
    let events = logged_events(dir.path(), &id);
    assert_eq!(view["event_seq"].as_u64().unwrap(), events.len() as u64);
    let logged: Vec<String> = events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::StrokeAdded { stroke } => Some(stroke.stroke_id.clone()),
            _ => None,
        })
        .collect();
    let shown: Vec<String> =
        view["canvas"]["strokes"].as_array().unwrap().iter().map(|s| s["stroke_id"].as_str().unwrap().to_owned()).collect();
    assert_eq!(logged.len(), 80);
    assert_eq!(shown, logged);
    assert_eq!(view["canvas_revision"].as_u64(), Some(80));
}
