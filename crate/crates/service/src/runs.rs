//! Run bookkeeping and execution. Runs of one session execute one at a time
//! in submission order; the heavy work happens on the blocking pool while a
//! ticker keeps progress events flowing.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use armsizer::pipeline::{run_pipeline, PipelineError, RunInputs, Stage};
use serde::{Deserialize, Serialize};
use serde_json::json;
use uuid::Uuid;

use crate::events::EventKind;
use crate::session::{RunSummary, Session};

/// Heartbeat period of progress events while a run is executing.
pub const PROGRESS_PERIOD: Duration = Duration::from_millis(100);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Queued,
    Running,
    Completed,
    Failed,
}

impl RunStatus {
    pub fn finished(self) -> bool {
        matches!(self, RunStatus::Completed | RunStatus::Failed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: Uuid,
    pub session_id: Uuid,
    pub generation: u64,
    pub status: RunStatus,
    pub stage: Option<Stage>,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    /// Some artifacts may be missing (failed run).
    pub partial: bool,
    pub artifacts: Vec<String>,
    /// Set when the session changed while the run executed.
    pub stale: bool,
    #[serde(skip)]
    pub dir: PathBuf,
}

pub type SharedRun = Arc<Mutex<RunRecord>>;

/// A queued run whose artifacts go to `data_dir/<run id>`.
pub fn new_record(session: &Session, generation: u64, data_dir: &Path) -> RunRecord {
    let id = Uuid::new_v4();
    RunRecord {
        id,
        session_id: session.id,
        generation,
        status: RunStatus::Queued,
        stage: None,
        failed_stage: None,
        error: None,
        partial: false,
        artifacts: vec![],
        stale: false,
        dir: data_dir.join(id.to_string()),
    }
}

/// Wait for the session's turn, then execute. Emits run_started, progress,
/// and finally run_completed or run_failed.
pub async fn execute(session: Arc<Session>, run: SharedRun, inputs: RunInputs) {
    let _turn = session.run_gate.lock().await;
    let (run_id, generation, dir) = {
        let mut r = run.lock().unwrap();
        r.status = RunStatus::Running;
        (r.id, r.generation, r.dir.clone())
    };
    let started = Instant::now();
    session.hub.publish(EventKind::RunStarted, json!({ "run_id": run_id }));

    let ticker = {
        let (session, run) = (session.clone(), run.clone());
        tokio::spawn(async move {
            let mut every = tokio::time::interval(PROGRESS_PERIOD);
            every.tick().await;
            loop {
                every.tick().await;
                let stage = run.lock().unwrap().stage;
                session.hub.publish(
                    EventKind::Progress,
                    json!({ "run_id": run_id, "stage": stage, "elapsed": started.elapsed().as_secs_f64(), "heartbeat": true }),
                );
            }
        })
    };

    let work = {
        let (session, run) = (session.clone(), run.clone());
        tokio::task::spawn_blocking(move || {
            run_pipeline(&inputs, Some(&dir), &mut |stage| {
                run.lock().unwrap().stage = Some(stage);
                session.hub.publish(
                    EventKind::Progress,
                    json!({ "run_id": run_id, "stage": stage, "elapsed": started.elapsed().as_secs_f64(), "heartbeat": false }),
                );
            })
        })
    };
    let outcome = work.await.unwrap_or_else(|e| Err(PipelineError::Artifact(format!("run task failed: {e}"))));
    ticker.abort();

    let mut r = run.lock().unwrap();
    r.artifacts = listed_artifacts(&r.dir);
    match outcome {
        Ok(results) => {
            let fresh = session.store_results(generation, RunSummary::new(run_id, &results));
            r.status = RunStatus::Completed;
            r.stale = !fresh;
            session.hub.publish(
                EventKind::RunCompleted,
                json!({ "run_id": run_id, "stale": !fresh, "artifacts": r.artifacts, "elapsed": started.elapsed().as_secs_f64() }),
            );
        }
        Err(e) => {
            r.status = RunStatus::Failed;
            r.partial = true;
            r.failed_stage = e.stage().or(r.stage);
            r.error = Some(e.to_string());
            session.hub.publish(
                EventKind::RunFailed,
                json!({ "run_id": run_id, "stage": r.failed_stage, "error": r.error, "artifacts": r.artifacts }),
            );
        }
    }
}

fn listed_artifacts(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|it| it.filter_map(|e| e.ok()).filter_map(|e| e.file_name().into_string().ok()).collect())
        .unwrap_or_default();
    names.sort();
    names
}
