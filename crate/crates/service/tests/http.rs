use std::sync::Arc;
use std::time::{Duration, Instant};

use armsizer::pipeline::RunManifest;
use armsizer::sizing::{bundled_catalog, SizingReport};
use armsizer::trajectory::{read_trajectory_csv, write_trajectory_csv};
use armsizer_service::{router, AppState};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api {
    state: Arc<AppState>,
    _dir: tempfile::TempDir,
}

impl Api {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        Self { state: AppState::new(dir.path(), bundled_catalog()), _dir: dir }
    }

    async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>, String) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = router(self.state.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let ctype = resp
            .headers()
            .get("content-type")
            .map(|v| v.to_str().unwrap().to_string())
            .unwrap_or_default();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes, ctype)
    }

    async fn json(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes, _) = self.call(method, uri, body).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn session(&self, body: Value) -> String {
        let (status, v) = self.json(Method::POST, "/sessions", Some(body)).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v["session_id"].as_str().unwrap().to_string()
    }

    async fn run_to_end(&self, sid: &str) -> (String, Value) {
        let (status, v) = self.json(Method::POST, &format!("/sessions/{sid}/runs"), None).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{v}");
        let run_id = v["run_id"].as_str().unwrap().to_string();
        let deadline = Instant::now() + Duration::from_secs(300);
        loop {
            let (_, r) = self.json(Method::GET, &format!("/runs/{run_id}"), None).await;
            if r["status"] == "completed" || r["status"] == "failed" {
                return (run_id, r);
            }
            assert!(Instant::now() < deadline, "run did not finish");
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
    }

    async fn artifact(&self, run_id: &str, kind: &str) -> Vec<u8> {
        let (status, bytes, _) = self.call(Method::GET, &format!("/runs/{run_id}/artifacts/{kind}"), None).await;
        assert_eq!(status, StatusCode::OK, "{kind}");
        bytes
    }
}

fn benchmark_session() -> Value {
    json!({
        "robot": "cr4",
        "scenario": {
            "scale": 1.6,
            "scaling_law": { "mass_exponent": 1.7, "inertia_exponent": 3.7 },
            "payload": {
                "mass": 10.0,
                "com_offset": [0.0, 0.0, 0.1],
                "inertia": [0.0547, 0.0, 0.0, 0.0, 0.0963, 0.0, 0.0, 0.0, 0.1083]
            }
        }
    })
}

#[tokio::test]
async fn benchmark_session_has_scaled_reach() {
    let api = Api::new();
    let sid = api.session(benchmark_session()).await;
    let (status, state) = api.json(Method::GET, &format!("/sessions/{sid}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!((state["reach"].as_f64().unwrap() - 1.512).abs() < 1e-12, "{}", state["reach"]);
    assert_eq!(state["q_actuated"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn cr6_session_and_defaults() {
    let api = Api::new();
    let sid = api.session(json!({ "robot": "cr6" })).await;
    let (_, state) = api.json(Method::GET, &format!("/sessions/{sid}/state"), None).await;
    assert_eq!(state["q_actuated"].as_array().unwrap().len(), 6);
    // An omitted body means a default CR4 session.
    let (status, v) = api.json(Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["state"]["robot"], "cr4");
}

#[tokio::test]
async fn invalid_scenario_is_rejected() {
    let api = Api::new();
    let (status, v) = api.json(Method::POST, "/sessions", Some(json!({ "scenario": { "scale": 0.0 } }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["error"].as_str().unwrap().contains("scale"));
    assert!(api.state.sessions.read().unwrap().is_empty());
}

#[tokio::test]
async fn unknown_ids_and_kinds_are_not_found() {
    let api = Api::new();
    let nil = "00000000-0000-0000-0000-000000000000";
    for uri in [
        format!("/sessions/{nil}/state"),
        format!("/sessions/not-a-uuid/state"),
        format!("/runs/{nil}"),
        format!("/runs/{nil}/artifacts/trajectory"),
    ] {
        let (status, _) = api.json(Method::GET, &uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn joint_jog_yaws_about_base_z() {
    let api = Api::new();
    let sid = api.session(json!({})).await;
    let (status, _) = api.json(Method::PUT, &format!("/sessions/{sid}/state"), Some(json!({ "q": [0.3, 0.4, -0.3, 0.0] }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, before) = api.json(Method::GET, &format!("/sessions/{sid}/state"), None).await;
    let (status, out) = api
        .json(Method::POST, &format!("/sessions/{sid}/jog"), Some(json!({ "mode": "joint", "axis": 0, "increment": 0.1 })))
        .await;
    assert_eq!(status, StatusCode::OK, "{out}");
    let p = |v: &Value| -> [f64; 3] { serde_json::from_value(v["position"].clone()).unwrap() };
    let (a, b) = (p(&before["tool"]), p(&out["state"]["tool"]));
    assert!((a[0].hypot(a[1]) - b[0].hypot(b[1])).abs() < 1e-9);
    assert!((b[1].atan2(b[0]) - a[1].atan2(a[0]) - 0.1).abs() < 1e-9);
    assert!((a[2] - b[2]).abs() < 1e-9);
    assert_eq!(out["clamped"], false);
}

#[tokio::test]
async fn zero_jog_and_oversized_jog() {
    let api = Api::new();
    let sid = api.session(json!({})).await;
    api.json(Method::PUT, &format!("/sessions/{sid}/state"), Some(json!({ "q": [0.0, 0.4, -0.3, 0.0] }))).await;
    let (_, before) = api.json(Method::GET, &format!("/sessions/{sid}/state"), None).await;
    let (_, out) = api
        .json(Method::POST, &format!("/sessions/{sid}/jog"), Some(json!({ "mode": "cartesian", "axis": "x", "increment": 0.0 })))
        .await;
    assert_eq!(out["state"]["q"], before["q"]);
    let (status, out) = api
        .json(Method::POST, &format!("/sessions/{sid}/jog"), Some(json!({ "mode": "joint", "axis": 2, "increment": -1.0 })))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out["clamped"], true);
    assert_eq!(out["applied"], -0.1);
}

#[tokio::test]
async fn unreachable_jog_leaves_state_unchanged() {
    let api = Api::new();
    let sid = api.session(json!({})).await;
    let (_, before) = api.json(Method::GET, &format!("/sessions/{sid}/state"), None).await;
    let (status, v) = api
        .json(Method::POST, &format!("/sessions/{sid}/jog"), Some(json!({ "mode": "cartesian", "axis": "z", "increment": 0.005 })))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["error"].as_str().unwrap().contains("reach"), "{v}");
    let (_, after) = api.json(Method::GET, &format!("/sessions/{sid}/state"), None).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn malformed_jog_is_rejected() {
    let api = Api::new();
    let sid = api.session(json!({})).await;
    for body in [
        json!({ "mode": "joint", "axis": 9, "increment": 0.1 }),
        json!({ "mode": "spin", "axis": 0, "increment": 0.1 }),
        json!({ "mode": "cartesian", "axis": "rx", "increment": 0.05 }),
    ] {
        let (status, _) = api.json(Method::POST, &format!("/sessions/{sid}/jog"), Some(body.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    }
}

#[tokio::test]
async fn empty_program_creates_no_run() {
    let api = Api::new();
    let sid = api.session(json!({})).await;
    let (status, _) = api
        .json(Method::PUT, &format!("/sessions/{sid}/program"), Some(json!({ "start_q": [0.0, 0.0, 0.0, 0.0], "primitives": [] })))
        .await;
    assert_eq!(status, StatusCode::OK);
    let (status, v) = api.json(Method::POST, &format!("/sessions/{sid}/runs"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert!(api.state.runs.read().unwrap().is_empty());
}

#[tokio::test]
async fn program_with_wrong_width_is_rejected() {
    let api = Api::new();
    let sid = api.session(json!({})).await;
    let (status, _) = api
        .json(Method::PUT, &format!("/sessions/{sid}/program"), Some(json!({ "start_q": [0.0], "primitives": [] })))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn benchmark_run_end_to_end() {
    let api = Api::new();
    let sid = api.session(benchmark_session()).await;
    let (_, results) = api.json(Method::GET, &format!("/sessions/{sid}/results"), None).await;
    assert_eq!(results["status"], "none");

    let (run_id, record) = api.run_to_end(&sid).await;
    assert_eq!(record["status"], "completed", "{record}");
    assert_eq!(record["partial"], false);

    // Six core artifacts, all served with the right media type.
    for (kind, ctype) in [
        ("trajectory", "text/csv"),
        ("torque_pro", "text/csv"),
        ("torque_demo", "text/csv"),
        ("metrics", "text/csv"),
        ("sizing", "application/json"),
        ("manifest", "application/json"),
    ] {
        let (status, bytes, got) = api.call(Method::GET, &format!("/runs/{run_id}/artifacts/{kind}"), None).await;
        assert_eq!(status, StatusCode::OK, "{kind}");
        assert!(!bytes.is_empty());
        assert_eq!(got, ctype, "{kind}");
    }
    let (status, _) = api.json(Method::GET, &format!("/runs/{run_id}/artifacts/telemetry"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let manifest = RunManifest::from_json(std::str::from_utf8(&api.artifact(&run_id, "manifest").await).unwrap()).unwrap();
    assert_eq!(manifest.scenario.scale, 1.6);
    assert_eq!(manifest.scenario.payload.mass, 10.0);
    assert_eq!(manifest.scenario.scaling_law.mass_exponent, 1.7);
    assert_eq!(manifest.scenario.scaling_law.inertia_exponent, 3.7);
    assert!(!manifest.partial);

    let report = SizingReport::from_json(std::str::from_utf8(&api.artifact(&run_id, "sizing").await).unwrap()).unwrap();
    let changed: Vec<&str> = report.round2.joints.iter().filter(|j| j.changed).map(|j| j.joint.as_str()).collect();
    assert_eq!(changed, vec!["J1"]);

    // Trajectory CSV reimports to the same samples.
    let csv = api.artifact(&run_id, "trajectory").await;
    let samples = read_trajectory_csv(csv.as_slice()).unwrap();
    let mut again = Vec::new();
    write_trajectory_csv(&samples, &mut again).unwrap();
    assert_eq!(csv, again);

    let (_, results) = api.json(Method::GET, &format!("/sessions/{sid}/results"), None).await;
    assert_eq!(results["status"], "fresh");
    assert_eq!(results["run_id"], run_id.as_str());
    assert_eq!(results["results"]["sizing"]["round2"]["joints"][0]["motor"], "AC_400W_2500");

    // Identical inputs, identical bytes.
    let (rerun, _) = api.run_to_end(&sid).await;
    for kind in ["trajectory", "torque_pro", "torque_demo", "metrics", "sizing", "manifest", "plot", "metrics_motor"] {
        assert_eq!(api.artifact(&run_id, kind).await, api.artifact(&rerun, kind).await, "{kind}");
    }

    // Any scenario change hides the results until the next run finishes.
    let mut scenario = benchmark_session()["scenario"].clone();
    scenario["payload"]["mass"] = json!(8.0);
    let (status, _) = api.json(Method::PUT, &format!("/sessions/{sid}/scenario"), Some(scenario)).await;
    assert_eq!(status, StatusCode::OK);
    let (_, results) = api.json(Method::GET, &format!("/sessions/{sid}/results"), None).await;
    assert_eq!(results["status"], "stale");
    assert_eq!(results["results"], Value::Null);
    let (_, program) = api.json(Method::GET, &format!("/sessions/{sid}/program"), None).await;
    let (status, _) = api.json(Method::PUT, &format!("/sessions/{sid}/program"), Some(program)).await;
    assert_eq!(status, StatusCode::OK);
    let (_, results) = api.json(Method::GET, &format!("/sessions/{sid}/results"), None).await;
    assert_eq!(results["status"], "stale");
}

#[tokio::test]
async fn failed_run_keeps_partial_artifacts() {
    let api = Api::new();
    let sid = api.session(json!({})).await;
    // A catalog with nothing strong enough for the shoulder.
    let mut catalog = bundled_catalog();
    catalog.gearboxes.retain(|g| g.name.starts_with("ZXS14"));
    let (status, v) = api
        .json(Method::POST, &format!("/sessions/{sid}/runs"), Some(json!({ "catalog": catalog })))
        .await;
    assert_eq!(status, StatusCode::ACCEPTED, "{v}");
    let run_id = v["run_id"].as_str().unwrap().to_string();
    let deadline = Instant::now() + Duration::from_secs(300);
    let record = loop {
        let (_, r) = api.json(Method::GET, &format!("/runs/{run_id}"), None).await;
        if r["status"] == "failed" || r["status"] == "completed" {
            break r;
        }
        assert!(Instant::now() < deadline);
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    assert_eq!(record["status"], "failed", "{record}");
    assert_eq!(record["failed_stage"], "sizing");
    assert_eq!(record["partial"], true);
    // Upstream stages survived; the sizing report did not.
    api.artifact(&run_id, "trajectory").await;
    api.artifact(&run_id, "metrics").await;
    let (status, _) = api.json(Method::GET, &format!("/runs/{run_id}/artifacts/sizing"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let manifest = RunManifest::from_json(std::str::from_utf8(&api.artifact(&run_id, "manifest").await).unwrap()).unwrap();
    assert!(manifest.partial);
    assert!(manifest.error.unwrap().contains("sizing"));
    let (_, results) = api.json(Method::GET, &format!("/sessions/{sid}/results"), None).await;
    assert_eq!(results["status"], "none");
}

#[tokio::test]
async fn scenario_round_trips() {
    let api = Api::new();
    let sid = api.session(benchmark_session()).await;
    let (_, v) = api.json(Method::GET, &format!("/sessions/{sid}/scenario"), None).await;
    assert_eq!(v["robot"], "cr4");
    assert_eq!(v["scenario"]["scale"], 1.6);
    let (status, _) = api.json(Method::PUT, &format!("/sessions/{sid}/scenario"), Some(json!({ "scale": -1.0 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, v) = api.json(Method::GET, &format!("/sessions/{sid}/scenario"), None).await;
    assert_eq!(v["scenario"]["scale"], 1.6);
}
