use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use armsizer::sizing::bundled_catalog;
use armsizer_service::{router, AppState};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use futures_util::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};
use tower::ServiceExt;

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

struct Server {
    state: Arc<AppState>,
    addr: SocketAddr,
    _dir: tempfile::TempDir,
}

impl Server {
    async fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let state = AppState::new(dir.path(), bundled_catalog());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let app = router(state.clone());
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        Self { state, addr, _dir: dir }
    }

    async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = router(self.state.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn session(&self) -> String {
        let (status, v) = self.call(Method::POST, "/sessions", Some(json!({}))).await;
        assert_eq!(status, StatusCode::CREATED);
        v["session_id"].as_str().unwrap().to_string()
    }

    async fn events(&self, sid: &str) -> Socket {
        let (ws, _) = connect_async(format!("ws://{}/sessions/{sid}/events", self.addr)).await.unwrap();
        ws
    }
}

async fn next_event(ws: &mut Socket) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(120), ws.next())
            .await
            .expect("event within timeout")
            .expect("stream open")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

fn assert_envelope(e: &Value) {
    for key in ["seq", "ts", "type", "payload"] {
        assert!(e.get(key).is_some(), "missing {key} in {e}");
    }
}

#[tokio::test]
async fn jog_stream_is_ordered_and_paced() {
    let server = Server::start().await;
    let sid = server.session().await;
    server.call(Method::PUT, &format!("/sessions/{sid}/state"), Some(json!({ "q": [0.0, 0.4, -0.3, 0.0] }))).await;
    let mut ws = server.events(&sid).await;

    for i in 0..20 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let (status, _) = server
            .call(Method::POST, &format!("/sessions/{sid}/jog"), Some(json!({ "mode": "joint", "axis": 0, "increment": 0.02 * sign })))
            .await;
        assert_eq!(status, StatusCode::OK);
    }
    let mut events = vec![];
    for _ in 0..20 {
        events.push(next_event(&mut ws).await);
    }
    for e in &events {
        assert_envelope(e);
        assert_eq!(e["type"], "state");
    }
    let seqs: Vec<u64> = events.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1), "{seqs:?}");
    // At most 20 Hz: successive jogs at least 50 ms apart (ms timestamps).
    let ts: Vec<u64> = events.iter().map(|e| e["ts"].as_u64().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[1] - w[0] >= 49), "{ts:?}");
}

#[tokio::test]
async fn failed_jog_emits_an_error_event() {
    let server = Server::start().await;
    let sid = server.session().await;
    let mut ws = server.events(&sid).await;
    let (status, _) = server
        .call(Method::POST, &format!("/sessions/{sid}/jog"), Some(json!({ "mode": "cartesian", "axis": "z", "increment": 0.005 })))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let e = next_event(&mut ws).await;
    assert_eq!(e["type"], "error");
    assert_eq!(e["payload"]["op"], "jog");
}

#[tokio::test]
async fn resync_request_returns_state() {
    let server = Server::start().await;
    let sid = server.session().await;
    let mut ws = server.events(&sid).await;
    ws.send(Message::Text("resync".into())).await.unwrap();
    let e = next_event(&mut ws).await;
    assert_eq!(e["type"], "state");
    assert_eq!(e["payload"]["q_actuated"], json!([0.0, 0.0, 0.0, 0.0]));
}

#[tokio::test]
async fn unknown_session_stream_is_not_found() {
    let server = Server::start().await;
    let r = connect_async(format!("ws://{}/sessions/00000000-0000-0000-0000-000000000000/events", server.addr)).await;
    assert!(r.is_err());
}

/// Collect events until the given run reaches a terminal state.
async fn until_finished(ws: &mut Socket, run_id: &str, into: &mut Vec<Value>) {
    loop {
        let e = next_event(ws).await;
        let done = matches!(e["type"].as_str(), Some("run_completed" | "run_failed")) && e["payload"]["run_id"] == run_id;
        into.push(e);
        if done {
            return;
        }
    }
}

#[tokio::test]
async fn run_progress_and_queueing() {
    let server = Server::start().await;
    let sid = server.session().await;
    let mut ws = server.events(&sid).await;

    let (s1, a) = server.call(Method::POST, &format!("/sessions/{sid}/runs"), None).await;
    let (s2, b) = server.call(Method::POST, &format!("/sessions/{sid}/runs"), None).await;
    assert_eq!((s1, s2), (StatusCode::ACCEPTED, StatusCode::ACCEPTED));
    let (a, b) = (a["run_id"].as_str().unwrap().to_string(), b["run_id"].as_str().unwrap().to_string());

    let mut events = vec![];
    until_finished(&mut ws, &a, &mut events).await;
    until_finished(&mut ws, &b, &mut events).await;

    let seqs: Vec<u64> = events.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1), "gap in {seqs:?}");

    let pos = |ty: &str, run: &str| {
        events
            .iter()
            .position(|e| e["type"] == ty && e["payload"]["run_id"] == run)
            .unwrap_or_else(|| panic!("no {ty} for {run}"))
    };
    // One in flight at a time: B starts only after A is done.
    assert!(pos("run_started", &a) < pos("run_completed", &a));
    assert!(pos("run_completed", &a) < pos("run_started", &b));
    assert_eq!(events[pos("run_completed", &a)]["payload"]["stale"], false);

    // Stage progress in pipeline order.
    let stages: Vec<&str> = events
        .iter()
        .filter(|e| e["type"] == "progress" && e["payload"]["run_id"] == a.as_str() && e["payload"]["heartbeat"] == false)
        .map(|e| e["payload"]["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["compile", "pro", "demo", "compare", "sizing", "persist"]);

    // Progress keeps coming at 5 Hz or better while a run executes.
    let times: Vec<u64> = events[pos("run_started", &a)..=pos("run_completed", &a)]
        .iter()
        .filter(|e| e["type"] != "state")
        .map(|e| e["ts"].as_u64().unwrap())
        .collect();
    let widest = times.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    assert!(widest <= 250, "progress gap {widest} ms");

    let (_, r) = server.call(Method::GET, &format!("/runs/{b}"), None).await;
    assert_eq!(r["status"], "completed");
}

#[tokio::test]
async fn mutation_during_run_marks_it_stale() {
    let server = Server::start().await;
    let sid = server.session().await;
    let mut ws = server.events(&sid).await;
    // The second run waits behind the first, so the edit lands while it is
    // still queued or running.
    server.call(Method::POST, &format!("/sessions/{sid}/runs"), None).await;
    let (_, v) = server.call(Method::POST, &format!("/sessions/{sid}/runs"), None).await;
    let run_id = v["run_id"].as_str().unwrap().to_string();
    let (_, program) = server.call(Method::GET, &format!("/sessions/{sid}/program"), None).await;
    server.call(Method::PUT, &format!("/sessions/{sid}/program"), Some(program)).await;

    let mut events = vec![];
    until_finished(&mut ws, &run_id, &mut events).await;
    assert!(events.iter().any(|e| e["type"] == "results_invalidated"));
    assert_eq!(events.last().unwrap()["payload"]["stale"], true);
    let (_, results) = server.call(Method::GET, &format!("/sessions/{sid}/results"), None).await;
    assert_eq!(results["status"], "stale");
    assert_eq!(results["results"], Value::Null);
}
