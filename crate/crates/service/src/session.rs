//! One robot, one scenario, one configuration and one program under edit.
//! Any change to the scenario or program bumps the generation, which marks
//! previously computed results stale.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use armsizer::analysis::{ComparisonMetrics, GateThresholds, JointVerdict};
use armsizer::dynamics::ProDiagnostics;
use armsizer::kinematics::{closure_residual, solve_closure, solve_ik, IkSettings, KinematicState, KinematicsError};
use armsizer::math::{axis_rotation, inf_norm, Vec3};
use armsizer::model::{reach, Dof, RigidBodyModel, RobotKind};
use armsizer::pipeline::{PipelineError, RunInputs, RunResults, ScenarioConfig};
use armsizer::sizing::{ActuatorCatalog, SizingConfig, SizingReport};
use armsizer::trajectory::{palletizing_cycle, PalletizingLayout, Program, DEFAULT_DT};
use nalgebra::{DVector, Isometry3};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use uuid::Uuid;

use crate::events::{EventHub, EventKind};

/// Largest joint (or Cartesian rotation) step per jog command, rad.
pub const MAX_JOG_ANGLE: f64 = 0.1;
/// Largest Cartesian translation per jog command, m.
pub const MAX_JOG_DISTANCE: f64 = 0.05;
/// Server-side ceiling on the jog cadence.
pub const MAX_JOG_RATE_HZ: f64 = 20.0;

const JOG_IK_TOLERANCE: f64 = 1e-9;
const JOG_IK_ITERATIONS: usize = 200;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid jog: {0}")]
    InvalidJog(String),
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("invalid configuration: {0}")]
    Configuration(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum JogCommand {
    /// `axis` is the 0-based actuated joint index; increment in rad.
    Joint {
        axis: usize,
        increment: f64,
        #[serde(default)]
        rate_limit_hz: Option<f64>,
    },
    /// World-frame direction at the tool point; increment in m or rad.
    Cartesian {
        axis: Dof,
        increment: f64,
        #[serde(default)]
        rate_limit_hz: Option<f64>,
    },
}

impl JogCommand {
    fn increment(&self) -> f64 {
        match *self {
            JogCommand::Joint { increment, .. } | JogCommand::Cartesian { increment, .. } => increment,
        }
    }

    fn bound(&self) -> f64 {
        match self {
            JogCommand::Cartesian { axis, .. } if !axis.is_rotational() => MAX_JOG_DISTANCE,
            _ => MAX_JOG_ANGLE,
        }
    }

    /// Minimum spacing between applied commands.
    pub fn min_interval(&self) -> Duration {
        let requested = match *self {
            JogCommand::Joint { rate_limit_hz, .. } | JogCommand::Cartesian { rate_limit_hz, .. } => rate_limit_hz,
        };
        let hz = requested.filter(|r| *r > 0.0 && r.is_finite()).map_or(MAX_JOG_RATE_HZ, |r| r.min(MAX_JOG_RATE_HZ));
        Duration::from_secs_f64(1.0 / hz)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseView {
    pub position: [f64; 3],
    /// Unit quaternion, [w, x, y, z].
    pub quaternion: [f64; 4],
}

impl From<&Isometry3<f64>> for PoseView {
    fn from(p: &Isometry3<f64>) -> Self {
        let t = p.translation.vector;
        let q = p.rotation.quaternion();
        Self { position: [t.x, t.y, t.z], quaternion: [q.w, q.i, q.j, q.k] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkView {
    pub name: String,
    #[serde(flatten)]
    pub pose: PoseView,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub robot: RobotKind,
    pub generation: u64,
    /// All coordinates, actuated first.
    pub q: Vec<f64>,
    pub q_actuated: Vec<f64>,
    pub joint_names: Vec<String>,
    pub joint_limits: Vec<[f64; 2]>,
    pub tool: PoseView,
    pub links: Vec<LinkView>,
    pub closure_residual: f64,
    pub reach: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JogOutcome {
    pub requested: f64,
    pub applied: f64,
    /// The increment exceeded the per-command bound.
    pub clamped: bool,
    /// A joint limit stopped the motion short.
    pub limited: bool,
    pub state: StateSnapshot,
}

/// What a finished run leaves on its session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: Uuid,
    pub samples: usize,
    pub duration: f64,
    pub metrics: ComparisonMetrics,
    pub motor_metrics: ComparisonMetrics,
    pub verdicts: Vec<JointVerdict>,
    pub sizing: SizingReport,
    pub diagnostics: ProDiagnostics,
}

impl RunSummary {
    pub fn new(run_id: Uuid, r: &RunResults) -> Self {
        Self {
            run_id,
            samples: r.trajectory.len(),
            duration: r.trajectory.duration(),
            metrics: r.metrics.clone(),
            motor_metrics: r.motor_metrics.clone(),
            verdicts: r.verdicts.clone(),
            sizing: r.sizing.clone(),
            diagnostics: r.diagnostics,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultsStatus {
    None,
    Stale,
    Fresh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsView {
    pub status: ResultsStatus,
    pub generation: u64,
    pub run_id: Option<Uuid>,
    /// Only present when fresh.
    pub results: Option<RunSummary>,
}

struct Core {
    robot: RobotKind,
    scenario: ScenarioConfig,
    model: RigidBodyModel,
    q: DVector<f64>,
    program: Program,
    generation: u64,
    results: Option<(u64, RunSummary)>,
}

impl Core {
    fn snapshot(&self) -> StateSnapshot {
        let m = &self.model;
        let n_a = m.n_actuated();
        let state = KinematicState::compute(m, &self.q).expect("session configuration matches its model");
        let tool = state.frame_pose(m, m.tool_frame()).expect("model has its tool frame");
        let links = m
            .links()
            .iter()
            .zip(&state.links)
            .map(|(l, p)| LinkView { name: l.name.clone(), pose: PoseView::from(p) })
            .collect();
        let residual = if m.closures().is_empty() {
            0.0
        } else {
            closure_residual(m, &self.q).map_or(f64::NAN, |r| inf_norm(&r))
        };
        StateSnapshot {
            robot: self.robot,
            generation: self.generation,
            q: self.q.iter().copied().collect(),
            q_actuated: self.q.rows(0, n_a).iter().copied().collect(),
            joint_names: (0..n_a).map(|c| m.coordinate_joint(c).name.clone()).collect(),
            joint_limits: (0..n_a).map(|c| m.coordinate_joint(c).limits).collect(),
            tool: PoseView::from(&tool),
            links,
            closure_residual: residual,
            reach: reach(m).unwrap_or(f64::NAN),
        }
    }

    fn solve(&self, q_a: &DVector<f64>) -> Result<DVector<f64>, KinematicsError> {
        let (n_a, n_p) = (self.model.n_actuated(), self.model.n_passive());
        let seed = self.q.rows(n_a, n_p).into_owned();
        solve_closure(&self.model, q_a, Some(&seed))
    }

    fn check_limits(&self, q_a: &DVector<f64>) -> Result<(), SessionError> {
        for (c, v) in q_a.iter().enumerate() {
            let j = self.model.coordinate_joint(c);
            if *v < j.limits[0] || *v > j.limits[1] {
                return Err(SessionError::Configuration(format!(
                    "{} = {v} is outside [{}, {}]",
                    j.name, j.limits[0], j.limits[1]
                )));
            }
        }
        Ok(())
    }

    fn jog_joint(&mut self, axis: usize, step: f64) -> Result<(f64, bool), SessionError> {
        let n_a = self.model.n_actuated();
        if axis >= n_a {
            return Err(SessionError::InvalidJog(format!("joint axis {axis} out of range 0..{n_a}")));
        }
        let [lo, hi] = self.model.coordinate_joint(axis).limits;
        let current = self.q[axis];
        let target = (current + step).clamp(lo, hi);
        let limited = target != current + step;
        let mut q_a = self.q.rows(0, n_a).into_owned();
        q_a[axis] = target;
        self.q = self.solve(&q_a)?;
        Ok((if limited { target - current } else { step }, limited))
    }

    fn jog_cartesian(&mut self, axis: Dof, step: f64) -> Result<(), SessionError> {
        let m = &self.model;
        let settings = IkSettings::for_model(m);
        if axis.is_rotational() && !settings.mask.0[axis.index()] {
            return Err(SessionError::InvalidJog(format!(
                "{axis:?} rotation is not independently controllable on this robot; jog the wrist joint instead"
            )));
        }
        let state = KinematicState::compute(m, &self.q)?;
        let pose = state.frame_pose(m, m.tool_frame())?;
        let mut dir = Vec3::zeros();
        dir[axis.index() % 3] = 1.0;
        let mut target = pose;
        if axis.is_rotational() {
            target.rotation = axis_rotation(&dir, step) * pose.rotation;
        } else {
            target.translation.vector += dir * step;
        }
        let origin = m
            .joint_index(&m.parts().reach_origin)
            .map(|j| state.anchors[j])
            .ok_or_else(|| SessionError::Configuration("model has no reach origin".into()))?;
        let limit = reach(m).map_err(KinematicsError::from)?;
        let distance = (target.translation.vector - origin).norm();
        if distance > limit {
            return Err(SessionError::Unreachable(format!(
                "target is {distance:.4} m from the shoulder, reach is {limit:.4} m"
            )));
        }
        let q = solve_ik(m, &self.q, &target, m.tool_frame(), &settings, JOG_IK_TOLERANCE, JOG_IK_ITERATIONS)?;
        self.check_limits(&q.rows(0, m.n_actuated()).into_owned())?;
        self.q = q;
        Ok(())
    }
}

/// Program a fresh session starts with: the palletizing cycle where the
/// robot supports it, otherwise an empty program.
fn starter_program(model: &RigidBodyModel) -> Program {
    palletizing_cycle(model, &PalletizingLayout::default()).unwrap_or_else(|_| Program {
        start_q: vec![0.0; model.n_actuated()],
        primitives: vec![],
        dt: DEFAULT_DT,
    })
}

pub struct Session {
    pub id: Uuid,
    pub hub: EventHub,
    core: Mutex<Core>,
    /// Time the last jog was applied; also serializes jogs.
    jog_gate: tokio::sync::Mutex<Option<Instant>>,
    /// FIFO: one run at a time, later ones wait their turn.
    pub(crate) run_gate: tokio::sync::Mutex<()>,
}

impl Session {
    pub fn new(robot: RobotKind, scenario: ScenarioConfig) -> Result<Self, SessionError> {
        let model = scenario.build_model(robot)?;
        let q_a = DVector::zeros(model.n_actuated());
        let q = if model.n_passive() == 0 { q_a } else { solve_closure(&model, &q_a, None)? };
        let program = starter_program(&model);
        Ok(Self {
            id: Uuid::new_v4(),
            hub: EventHub::default(),
            core: Mutex::new(Core { robot, scenario, model, q, program, generation: 0, results: None }),
            jog_gate: tokio::sync::Mutex::new(None),
            run_gate: tokio::sync::Mutex::new(()),
        })
    }

    pub fn snapshot(&self) -> StateSnapshot {
        self.core.lock().unwrap().snapshot()
    }

    fn publish_state(&self, state: &StateSnapshot) {
        self.hub.publish(EventKind::State, serde_json::to_value(state).expect("state serializes"));
    }

    fn publish_error(&self, op: &str, e: &SessionError) {
        self.hub.publish(EventKind::Error, json!({ "op": op, "message": e.to_string() }));
    }

    /// Broadcast the current state to every subscriber.
    pub fn resync(&self) {
        let s = self.snapshot();
        self.publish_state(&s);
    }

    /// Apply a jog immediately. On failure the configuration is left as it
    /// was and an error event is emitted.
    pub fn jog_now(&self, cmd: &JogCommand) -> Result<JogOutcome, SessionError> {
        let requested = cmd.increment();
        let result = (|| {
            if !requested.is_finite() {
                return Err(SessionError::InvalidJog("increment must be finite".into()));
            }
            let bound = cmd.bound();
            let step = requested.clamp(-bound, bound);
            let clamped = step != requested;
            let mut core = self.core.lock().unwrap();
            let before = core.q.clone();
            let applied = match *cmd {
                JogCommand::Joint { axis, .. } => core.jog_joint(axis, step),
                JogCommand::Cartesian { axis, .. } => core.jog_cartesian(axis, step).map(|_| (step, false)),
            };
            match applied {
                Ok((applied, limited)) => Ok(JogOutcome { requested, applied, clamped, limited, state: core.snapshot() }),
                Err(e) => {
                    core.q = before;
                    Err(e)
                }
            }
        })();
        match &result {
            Ok(out) => self.publish_state(&out.state),
            Err(e) => self.publish_error("jog", e),
        }
        result
    }

    /// Jog respecting the command's rate limit: a command arriving early
    /// waits for its slot instead of being dropped.
    pub async fn jog(&self, cmd: &JogCommand) -> Result<JogOutcome, SessionError> {
        let mut last = self.jog_gate.lock().await;
        if let Some(t) = *last {
            let due = t + cmd.min_interval();
            tokio::time::sleep_until(due.into()).await;
        }
        let out = self.jog_now(cmd);
        *last = Some(Instant::now());
        out
    }

    /// Move to the given actuated configuration (teach / go-to).
    pub fn set_configuration(&self, q_a: &[f64]) -> Result<StateSnapshot, SessionError> {
        let result = (|| {
            let mut core = self.core.lock().unwrap();
            let n_a = core.model.n_actuated();
            if q_a.len() != n_a {
                return Err(SessionError::Configuration(format!("expected {n_a} joint values, got {}", q_a.len())));
            }
            if q_a.iter().any(|v| !v.is_finite()) {
                return Err(SessionError::Configuration("joint values must be finite".into()));
            }
            let q_a = DVector::from_column_slice(q_a);
            core.check_limits(&q_a)?;
            // A warm start from a distant pose can converge onto the other
            // assembly branch; walk out from the reference pose instead.
            core.q = solve_closure(&core.model, &q_a, None)?;
            Ok(core.snapshot())
        })();
        match &result {
            Ok(s) => self.publish_state(s),
            Err(e) => self.publish_error("configuration", e),
        }
        result
    }

    pub fn program(&self) -> Program {
        self.core.lock().unwrap().program.clone()
    }

    pub fn scenario(&self) -> (RobotKind, ScenarioConfig) {
        let core = self.core.lock().unwrap();
        (core.robot, core.scenario.clone())
    }

    pub fn generation(&self) -> u64 {
        self.core.lock().unwrap().generation
    }

    fn invalidate(&self, core: &mut Core, reason: &str) {
        core.generation += 1;
        let had = core.results.as_ref().map(|(_, r)| r.run_id);
        self.hub.publish(
            EventKind::ResultsInvalidated,
            json!({ "reason": reason, "generation": core.generation, "run_id": had }),
        );
    }

    pub fn set_program(&self, program: Program) -> Result<u64, SessionError> {
        let mut core = self.core.lock().unwrap();
        let n_a = core.model.n_actuated();
        if program.start_q.len() != n_a {
            return Err(SessionError::Configuration(format!(
                "program start_q needs {n_a} values, got {}",
                program.start_q.len()
            )));
        }
        core.program = program;
        self.invalidate(&mut core, "program");
        self.hub.publish(
            EventKind::Program,
            json!({ "generation": core.generation, "primitives": core.program.primitives.len() }),
        );
        Ok(core.generation)
    }

    /// Swap the scenario; the model is rebuilt and the current joint values
    /// are carried over when they still close.
    pub fn set_scenario(&self, scenario: ScenarioConfig) -> Result<StateSnapshot, SessionError> {
        let mut core = self.core.lock().unwrap();
        let model = scenario.build_model(core.robot)?;
        let n_a = model.n_actuated();
        let q_a = core.q.rows(0, n_a).into_owned();
        let q = if model.n_passive() == 0 { q_a } else { solve_closure(&model, &q_a, None)? };
        core.model = model;
        core.scenario = scenario;
        core.q = q;
        self.invalidate(&mut core, "scenario");
        self.hub.publish(EventKind::Scenario, json!({ "generation": core.generation }));
        let snap = core.snapshot();
        drop(core);
        self.publish_state(&snap);
        Ok(snap)
    }

    /// Inputs for a run of the current scenario and program, and the
    /// generation they belong to.
    pub fn run_inputs(&self, catalog: ActuatorCatalog, sizing: SizingConfig, gate: GateThresholds) -> (RunInputs, u64) {
        let core = self.core.lock().unwrap();
        let inputs = RunInputs {
            robot: core.robot,
            scenario: core.scenario.clone(),
            program: core.program.clone(),
            catalog,
            sizing,
            gate,
        };
        (inputs, core.generation)
    }

    /// Record a finished run. Returns false when the session changed while
    /// it ran, in which case the results are kept but reported stale.
    pub fn store_results(&self, generation: u64, summary: RunSummary) -> bool {
        let mut core = self.core.lock().unwrap();
        let fresh = generation == core.generation;
        core.results = Some((generation, summary));
        fresh
    }

    pub fn results(&self) -> ResultsView {
        let core = self.core.lock().unwrap();
        match &core.results {
            None => ResultsView { status: ResultsStatus::None, generation: core.generation, run_id: None, results: None },
            Some((g, r)) if *g == core.generation => ResultsView {
                status: ResultsStatus::Fresh,
                generation: core.generation,
                run_id: Some(r.run_id),
                results: Some(r.clone()),
            },
            Some((_, r)) => ResultsView {
                status: ResultsStatus::Stale,
                generation: core.generation,
                run_id: Some(r.run_id),
                results: None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cr4() -> Session {
        Session::new(RobotKind::Cr4, ScenarioConfig::default()).unwrap()
    }

    fn radius_and_yaw(s: &StateSnapshot) -> (f64, f64, f64) {
        let [x, y, z] = s.tool.position;
        (x.hypot(y), y.atan2(x), z)
    }

    #[test]
    fn zero_increment_leaves_configuration_unchanged() {
        let s = cr4();
        let before = s.snapshot();
        let out = s.jog_now(&JogCommand::Joint { axis: 1, increment: 0.0, rate_limit_hz: None }).unwrap();
        assert_eq!(out.state.q, before.q);
        let out = s.jog_now(&JogCommand::Cartesian { axis: Dof::Z, increment: 0.0, rate_limit_hz: None }).unwrap();
        assert_eq!(out.state.q, before.q);
    }

    #[test]
    fn j1_jog_yaws_the_tool_about_base_z() {
        let s = cr4();
        s.set_configuration(&[0.2, 0.4, -0.3, 0.0]).unwrap();
        let (r0, yaw0, z0) = radius_and_yaw(&s.snapshot());
        let out = s.jog_now(&JogCommand::Joint { axis: 0, increment: 0.1, rate_limit_hz: None }).unwrap();
        let (r1, yaw1, z1) = radius_and_yaw(&out.state);
        assert_relative_eq!(r1, r0, epsilon = 1e-9);
        assert_relative_eq!(z1, z0, epsilon = 1e-9);
        assert_relative_eq!(yaw1 - yaw0, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn oversized_increments_are_clamped_and_reported() {
        let s = cr4();
        s.set_configuration(&[0.0, 0.4, -0.3, 0.0]).unwrap();
        let out = s.jog_now(&JogCommand::Joint { axis: 0, increment: 0.5, rate_limit_hz: None }).unwrap();
        assert!(out.clamped);
        assert_eq!(out.applied, MAX_JOG_ANGLE);
        let out = s.jog_now(&JogCommand::Cartesian { axis: Dof::Z, increment: -0.2, rate_limit_hz: None }).unwrap();
        assert!(out.clamped);
        assert_eq!(out.applied, -MAX_JOG_DISTANCE);
    }

    #[test]
    fn joint_limit_stops_the_jog_short() {
        let s = cr4();
        let [_, hi] = s.snapshot().joint_limits[0];
        s.set_configuration(&[hi - 0.03, 0.0, 0.0, 0.0]).unwrap();
        let out = s.jog_now(&JogCommand::Joint { axis: 0, increment: 0.1, rate_limit_hz: None }).unwrap();
        assert!(out.limited);
        assert_relative_eq!(out.applied, 0.03, epsilon = 1e-12);
        assert_eq!(out.state.q_actuated[0], hi);
    }

    #[test]
    fn cartesian_jog_moves_the_tool_along_the_axis() {
        let s = cr4();
        s.set_configuration(&[0.0, 0.4, -0.3, 0.0]).unwrap();
        let p0 = s.snapshot().tool.position;
        let out = s.jog_now(&JogCommand::Cartesian { axis: Dof::Z, increment: 0.005, rate_limit_hz: None }).unwrap();
        let p1 = out.state.tool.position;
        assert_relative_eq!(p1[2] - p0[2], 0.005, epsilon = 1e-8);
        assert_relative_eq!(p1[0], p0[0], epsilon = 1e-8);
        assert_relative_eq!(p1[1], p0[1], epsilon = 1e-8);
        assert!(out.state.closure_residual < 1e-9);
    }

    #[test]
    fn out_of_reach_cartesian_jog_fails_without_moving() {
        // The reference pose is fully stretched, so the tool sits on the
        // reach sphere about the shoulder.
        let s = cr4();
        let sub = s.hub.subscribe();
        let before = s.snapshot();
        let err = s.jog_now(&JogCommand::Cartesian { axis: Dof::Z, increment: 0.005, rate_limit_hz: None }).unwrap_err();
        assert!(matches!(err, SessionError::Unreachable(_)), "{err}");
        assert_eq!(s.snapshot(), before);
        let e = sub.try_recv().unwrap();
        assert_eq!(e.kind, EventKind::Error);
        assert_eq!(e.payload["op"], "jog");
        assert!(sub.try_recv().is_none());
    }

    #[test]
    fn absolute_moves_stay_on_the_reference_branch() {
        let s = cr4();
        s.set_configuration(&[0.0, -0.2, 0.4, 0.0]).unwrap();
        let far = s.set_configuration(&[0.0, 0.0, -1.2, 0.0]).unwrap();
        let fresh = cr4();
        let direct = fresh.set_configuration(&[0.0, 0.0, -1.2, 0.0]).unwrap();
        assert_eq!(far.q, direct.q);
    }

    #[test]
    fn mutations_mark_results_stale() {
        let s = cr4();
        assert_eq!(s.results().status, ResultsStatus::None);
        let g = s.generation();
        s.set_program(s.program()).unwrap();
        assert_eq!(s.generation(), g + 1);
        assert!(s.set_scenario(ScenarioConfig { scale: 0.0, ..Default::default() }).is_err());
        assert_eq!(s.generation(), g + 1);
    }

    #[test]
    fn rate_limit_never_exceeds_the_server_ceiling() {
        let cmd = JogCommand::Joint { axis: 0, increment: 0.0, rate_limit_hz: Some(1000.0) };
        assert_eq!(cmd.min_interval(), Duration::from_millis(50));
        let cmd = JogCommand::Joint { axis: 0, increment: 0.0, rate_limit_hz: Some(4.0) };
        assert_eq!(cmd.min_interval(), Duration::from_millis(250));
    }

    #[test]
    fn cr6_session_has_six_actuated_joints() {
        let s = Session::new(RobotKind::Cr6, ScenarioConfig::default()).unwrap();
        assert_eq!(s.snapshot().q_actuated.len(), 6);
        assert!(s.program().primitives.is_empty());
    }

    #[test]
    fn jog_command_wire_format() {
        let cmd: JogCommand = serde_json::from_str(r#"{"mode":"cartesian","axis":"z","increment":0.005}"#).unwrap();
        assert_eq!(cmd, JogCommand::Cartesian { axis: Dof::Z, increment: 0.005, rate_limit_hz: None });
        let cmd: JogCommand = serde_json::from_str(r#"{"mode":"joint","axis":2,"increment":-0.1,"rate_limit_hz":10}"#).unwrap();
        assert_eq!(cmd, JogCommand::Joint { axis: 2, increment: -0.1, rate_limit_hz: Some(10.0) });
    }
}
