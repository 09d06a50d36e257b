//! End-to-end run: scenario + program → trajectory, PRO and DEMO torques,
//! agreement metrics and a sizing report, persisted as a flat directory of
//! CSV/JSON artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    agreement_gate, compare_motor_side, compare_profiles, write_metrics_csv, write_plot_csv, AnalysisError,
    ComparisonMetrics, GateThresholds, JointVerdict,
};
use crate::dynamics::{
    demo_torque_profile, lump_serial_model, pro_torque_profile, read_torque_csv, write_torque_csv, DynamicsError,
    ProDiagnostics, TorquePath, TorqueProfile, SOLVED_TOLERANCE,
};
use crate::kinematics::ClosureSolver;
use crate::math::Vec3;
use crate::model::{
    attach_payload, build_cr4, build_cr6, model_to_json, ModelError, PayloadSpec, RigidBodyModel, RobotKind, ScalingLaw,
};
use crate::sizing::{
    bundled_catalog, motor_side_torque, ActuatorCatalog, FrictionParams, Selection, SizingConfig, SizingError,
    SizingReport,
};
use crate::table::TableError;
use crate::trajectory::{
    palletizing_cycle, read_trajectory_csv, write_trajectory_csv, PalletizingLayout, Program, TrajectoryError,
    TrajectoryManifest, TrajectorySamples, IK_TOLERANCE,
};

pub const ENGINE_NAME: &str = "armsizer";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scale, inertial overrides and environment a run is evaluated under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scale: f64,
    pub scaling_law: ScalingLaw,
    pub payload: PayloadSpec,
    /// Per actuated joint, or empty for none.
    pub friction: Vec<FrictionParams>,
    /// Joint-side reflected rotor inertia per actuated joint (kg·m²), or empty.
    pub rotor_reflection: Vec<f64>,
    pub gravity: [f64; 3],
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scale: 1.0,
            scaling_law: ScalingLaw::GEOMETRIC,
            payload: PayloadSpec::none(),
            friction: vec![],
            rotor_reflection: vec![],
            gravity: [0.0, 0.0, -9.81],
        }
    }
}

impl ScenarioConfig {
    /// CR4 palletizing benchmark: s = 1.6, calibrated exponents, 10 kg payload.
    pub fn benchmark() -> Self {
        Self {
            scale: 1.6,
            scaling_law: ScalingLaw::CALIBRATED,
            payload: PayloadSpec::with_diagonal(10.0, Vec3::new(0.0, 0.0, 0.1), Vec3::new(0.0547, 0.0963, 0.1083)),
            ..Self::default()
        }
    }

    pub fn gravity(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    pub fn validate(&self, n_actuated: usize) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Scenario(m));
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        if let Some(v) = self.scaling_law.violations().into_iter().next() {
            return bad(v);
        }
        if !self.friction.is_empty() && self.friction.len() != n_actuated {
            return bad(format!("friction needs {n_actuated} entries, got {}", self.friction.len()));
        }
        if let Some(j) = self.friction.iter().position(|f| !f.is_valid()) {
            return bad(format!("friction of joint {} must be non-negative", j + 1));
        }
        if !self.rotor_reflection.is_empty() && self.rotor_reflection.len() != n_actuated {
            return bad(format!("rotor_reflection needs {n_actuated} entries, got {}", self.rotor_reflection.len()));
        }
        if self.rotor_reflection.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("rotor_reflection must be non-negative".into());
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return bad("gravity must be finite".into());
        }
        Ok(())
    }

    /// Built, scaled and payload-loaded model.
    pub fn build_model(&self, robot: RobotKind) -> Result<RigidBodyModel, PipelineError> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(PipelineError::Scenario(format!("scale must be positive, got {}", self.scale)));
        }
        let model = match robot {
            RobotKind::Cr4 => build_cr4(self.scale, self.scaling_law)?,
            RobotKind::Cr6 => build_cr6(self.scale, self.scaling_law)?,
            other => return Err(PipelineError::Scenario(format!("robot kind {other:?} cannot be built from a scenario"))),
        };
        self.validate(model.n_actuated())?;
        Ok(attach_payload(&model, &self.payload)?)
    }

    /// `parameter,value` rows, one scalar per row.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, f64)> = vec![
            ("scale".into(), self.scale),
            ("mass_exponent".into(), self.scaling_law.mass_exponent),
            ("inertia_exponent".into(), self.scaling_law.inertia_exponent),
            ("payload_mass_kg".into(), self.payload.mass),
        ];
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            rows.push((format!("payload_com_{axis}_m"), self.payload.com_offset[i]));
        }
        for (r, a) in ["x", "y", "z"].iter().enumerate() {
            for (c, b) in ["x", "y", "z"].iter().enumerate() {
                rows.push((format!("payload_i{a}{b}_kgm2"), self.payload.inertia[(r, c)]));
            }
        }
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            rows.push((format!("gravity_{axis}"), self.gravity[i]));
        }
        for (j, f) in self.friction.iter().enumerate() {
            rows.push((format!("viscous_J{}", j + 1), f.viscous));
            rows.push((format!("coulomb_J{}", j + 1), f.coulomb));
        }
        for (j, r) in self.rotor_reflection.iter().enumerate() {
            rows.push((format!("rotor_reflection_J{}_kgm2", j + 1), *r));
        }
        let mut out = String::from("parameter,value\n");
        for (k, v) in rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Compile,
    Pro,
    Demo,
    Compare,
    Sizing,
    Persist,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Compile => "compile",
            Stage::Pro => "pro",
            Stage::Demo => "demo",
            Stage::Compare => "compare",
            Stage::Sizing => "sizing",
            Stage::Persist => "persist",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid program: {0}")]
    Program(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("compile stage: {0}")]
    Compile(#[source] TrajectoryError),
    #[error("pro stage: {0}")]
    Pro(#[source] DynamicsError),
    #[error("demo stage: {0}")]
    Demo(#[source] DynamicsError),
    #[error("compare stage: {0}")]
    Compare(#[from] AnalysisError),
    #[error("sizing stage: {0}")]
    Sizing(#[from] SizingError),
    #[error("persist stage: {0}")]
    Io(#[from] std::io::Error),
    #[error("run directory: {0}")]
    Artifact(String),
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Compile(_) => Some(Stage::Compile),
            PipelineError::Pro(_) => Some(Stage::Pro),
            PipelineError::Demo(_) => Some(Stage::Demo),
            PipelineError::Compare(_) => Some(Stage::Compare),
            PipelineError::Sizing(_) => Some(Stage::Sizing),
            PipelineError::Io(_) | PipelineError::Artifact(_) => Some(Stage::Persist),
            _ => None,
        }
    }
}

impl From<TableError> for PipelineError {
    fn from(e: TableError) -> Self {
        PipelineError::Artifact(e.to_string())
    }
}

/// Everything a run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInputs {
    pub robot: RobotKind,
    pub scenario: ScenarioConfig,
    pub program: Program,
    pub catalog: ActuatorCatalog,
    pub sizing: SizingConfig,
    pub gate: GateThresholds,
}

impl RunInputs {
    /// CR4 benchmark scenario, palletizing program and bundled catalog.
    pub fn benchmark() -> Result<Self, PipelineError> {
        let scenario = ScenarioConfig::benchmark();
        let model = scenario.build_model(RobotKind::Cr4)?;
        let program = palletizing_cycle(&model, &PalletizingLayout::default()).map_err(PipelineError::Compile)?;
        Ok(Self {
            robot: RobotKind::Cr4,
            scenario,
            program,
            catalog: bundled_catalog(),
            sizing: SizingConfig::default(),
            gate: GateThresholds::default(),
        })
    }

    pub fn validate_program(&self) -> Result<(), PipelineError> {
        if self.program.primitives.is_empty() {
            return Err(PipelineError::Program("program has no motion primitives".into()));
        }
        if !(self.program.dt > 0.0 && self.program.dt.is_finite()) {
            return Err(PipelineError::Program(format!("dt must be positive, got {}", self.program.dt)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub closure: f64,
    pub kkt: f64,
    pub ik: f64,
    pub dt: f64,
}

/// Provenance record written next to every run's artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine: String,
    pub engine_version: String,
    pub robot: RobotKind,
    /// SHA-256 of the loaded model's JSON document.
    pub model_hash: String,
    pub catalog_hash: String,
    pub scenario: ScenarioConfig,
    pub program: Program,
    pub sizing: SizingConfig,
    pub gate: GateThresholds,
    pub tolerances: Tolerances,
    pub samples: usize,
    pub duration: f64,
    pub pro_diagnostics: Option<ProDiagnostics>,
    pub artifacts: Vec<String>,
    pub partial: bool,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Artifact(format!("manifest: {e}")))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files in a run directory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Trajectory,
    TorquePro,
    TorqueDemo,
    Metrics,
    Sizing,
    Manifest,
    TrajectoryManifest,
    MetricsMotor,
    Plot,
    Scenario,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 10] = [
        ArtifactKind::Trajectory,
        ArtifactKind::TorquePro,
        ArtifactKind::TorqueDemo,
        ArtifactKind::Metrics,
        ArtifactKind::Sizing,
        ArtifactKind::Manifest,
        ArtifactKind::TrajectoryManifest,
        ArtifactKind::MetricsMotor,
        ArtifactKind::Plot,
        ArtifactKind::Scenario,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ArtifactKind::Trajectory => "trajectory.csv",
            ArtifactKind::TorquePro => "torque_pro.csv",
            ArtifactKind::TorqueDemo => "torque_demo.csv",
            ArtifactKind::Metrics => "metrics.csv",
            ArtifactKind::Sizing => "sizing.json",
            ArtifactKind::Manifest => "manifest.json",
            ArtifactKind::TrajectoryManifest => "trajectory_manifest.json",
            ArtifactKind::MetricsMotor => "metrics_motor.csv",
            ArtifactKind::Plot => "plot.csv",
            ArtifactKind::Scenario => "scenario.csv",
        }
    }

    /// Accepts the snake-case name (`torque_pro`) or the file name.
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.file_name() == s || k.file_name().split('.').next() == Some(s))
    }

    pub fn content_type(self) -> &'static str {
        if self.file_name().ends_with(".json") {
            "application/json"
        } else {
            "text/csv"
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResults {
    pub trajectory: TrajectorySamples,
    /// Joint side; motor side filled from the round-2 selection.
    pub pro: TorqueProfile,
    pub demo: TorqueProfile,
    pub metrics: ComparisonMetrics,
    pub motor_metrics: ComparisonMetrics,
    pub verdicts: Vec<JointVerdict>,
    pub sizing: SizingReport,
    pub diagnostics: ProDiagnostics,
    pub manifest: RunManifest,
}

fn motor_side(
    profile: &TorqueProfile,
    traj: &TrajectorySamples,
    selection: &Selection,
    catalog: &ActuatorCatalog,
    scenario: &ScenarioConfig,
) -> Result<DMatrix<f64>, SizingError> {
    let mut out = DMatrix::zeros(profile.len(), profile.n_joints());
    for (j, sel) in selection.joints.iter().enumerate() {
        let missing = |n: &str| SizingError::Catalog { location: "selection".into(), message: format!("unknown part {n}") };
        let motor = catalog.motor(&sel.motor).ok_or_else(|| missing(&sel.motor))?;
        let gearbox = catalog.gearbox(&sel.gearbox).ok_or_else(|| missing(&sel.gearbox))?;
        let friction = scenario.friction.get(j).copied().unwrap_or_default();
        let refl = scenario.rotor_reflection.get(j).copied().unwrap_or(0.0);
        for k in 0..profile.len() {
            let (qd, qdd) = (traj.qd_a[(k, j)], traj.qdd_a[(k, j)]);
            out[(k, j)] = motor_side_torque(profile.tau[(k, j)] + refl * qdd, qd, qdd, gearbox, motor, &friction);
        }
    }
    Ok(out)
}

fn base_manifest(inputs: &RunInputs, model: &RigidBodyModel) -> RunManifest {
    RunManifest {
        engine: ENGINE_NAME.into(),
        engine_version: ENGINE_VERSION.into(),
        robot: inputs.robot,
        model_hash: sha256_hex(model_to_json(model).as_bytes()),
        catalog_hash: sha256_hex(inputs.catalog.to_json().as_bytes()),
        scenario: inputs.scenario.clone(),
        program: inputs.program.clone(),
        sizing: inputs.sizing,
        gate: inputs.gate,
        tolerances: Tolerances {
            closure: ClosureSolver::default().tolerance,
            kkt: SOLVED_TOLERANCE,
            ik: IK_TOLERANCE,
            dt: inputs.program.dt,
        },
        samples: 0,
        duration: 0.0,
        pro_diagnostics: None,
        artifacts: vec![],
        partial: true,
        error: None,
    }
}

/// Writes artifacts as stages complete so a failed run still leaves what it
/// produced.
struct Persist<'a> {
    dir: Option<&'a Path>,
    written: Vec<String>,
}

impl Persist<'_> {
    fn put(&mut self, kind: ArtifactKind, bytes: &[u8]) -> Result<(), PipelineError> {
        if let Some(dir) = self.dir {
            let mut f = fs::File::create(dir.join(kind.file_name()))?;
            f.write_all(bytes)?;
        }
        self.written.push(kind.file_name().to_string());
        Ok(())
    }
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), PipelineError>) -> Result<Vec<u8>, PipelineError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Run every stage. `progress` is told when each stage starts.
pub fn run_pipeline(inputs: &RunInputs, dir: Option<&Path>, progress: &mut dyn FnMut(Stage)) -> Result<RunResults, PipelineError> {
    inputs.validate_program()?;
    inputs.sizing.validate()?;
    inputs.catalog.validate()?;
    let model = inputs.scenario.build_model(inputs.robot)?;
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    let mut manifest = base_manifest(inputs, &model);
    let mut out = Persist { dir, written: vec![] };
    let result = run_stages(inputs, &model, &mut manifest, &mut out, progress);
    manifest.artifacts = out.written.clone();
    manifest.artifacts.push(ArtifactKind::Manifest.file_name().to_string());
    match &result {
        Ok(_) => manifest.partial = false,
        Err(e) => manifest.error = Some(e.to_string()),
    }
    out.put(ArtifactKind::Manifest, manifest.to_json().as_bytes())?;
    result.map(|mut r| {
        r.manifest = manifest;
        r
    })
}

fn run_stages(
    inputs: &RunInputs,
    model: &RigidBodyModel,
    manifest: &mut RunManifest,
    out: &mut Persist,
    progress: &mut dyn FnMut(Stage),
) -> Result<RunResults, PipelineError> {
    let scenario = &inputs.scenario;
    let gravity = scenario.gravity();
    out.put(ArtifactKind::Scenario, scenario.to_csv().as_bytes())?;

    progress(Stage::Compile);
    let traj = inputs.program.compile(model).map_err(PipelineError::Compile)?;
    manifest.samples = traj.len();
    manifest.duration = traj.duration();
    out.put(ArtifactKind::Trajectory, &to_bytes(|b| write_trajectory_csv(&traj, b).map_err(PipelineError::Compile))?)?;
    out.put(ArtifactKind::TrajectoryManifest, TrajectoryManifest::new(&inputs.program, &traj).to_json().as_bytes())?;

    progress(Stage::Pro);
    let (mut pro, diagnostics) = pro_torque_profile(model, &traj, &gravity).map_err(PipelineError::Pro)?;
    manifest.pro_diagnostics = Some(diagnostics);
    out.put(ArtifactKind::TorquePro, &to_bytes(|b| write_torque_csv(&pro, b).map_err(PipelineError::Pro))?)?;

    progress(Stage::Demo);
    let serial = lump_serial_model(model).map_err(PipelineError::Demo)?;
    let mut demo = demo_torque_profile(&serial, &traj, &gravity).map_err(PipelineError::Demo)?;
    out.put(ArtifactKind::TorqueDemo, &to_bytes(|b| write_torque_csv(&demo, b).map_err(PipelineError::Demo))?)?;

    progress(Stage::Compare);
    let metrics = compare_profiles(&demo, &pro)?;
    let verdicts = agreement_gate(&metrics, &inputs.gate);
    out.put(ArtifactKind::Metrics, &to_bytes(|b| Ok(write_metrics_csv(&metrics, b)?))?)?;
    out.put(ArtifactKind::Plot, &to_bytes(|b| Ok(write_plot_csv(&demo, &pro, b)?))?)?;

    progress(Stage::Sizing);
    let (sizing, _) = SizingReport::compute(
        model,
        &traj,
        &pro,
        &inputs.catalog,
        &inputs.sizing,
        &gravity,
        &scenario.friction,
        &scenario.rotor_reflection,
    )?;
    out.put(ArtifactKind::Sizing, sizing.to_json().as_bytes())?;

    pro.motor_side = Some(motor_side(&pro, &traj, &sizing.round2, &inputs.catalog, scenario)?);
    demo.motor_side = Some(motor_side(&demo, &traj, &sizing.round2, &inputs.catalog, scenario)?);
    let motor_metrics = compare_motor_side(&demo, &pro)?;
    out.put(ArtifactKind::MetricsMotor, &to_bytes(|b| Ok(write_metrics_csv(&motor_metrics, b)?))?)?;

    progress(Stage::Persist);
    Ok(RunResults {
        trajectory: traj,
        pro,
        demo,
        metrics,
        motor_metrics,
        verdicts,
        sizing,
        diagnostics,
        manifest: manifest.clone(),
    })
}

pub fn artifact_path(run_dir: &Path, kind: ArtifactKind) -> PathBuf {
    run_dir.join(kind.file_name())
}

/// Recompute the sizing report from a finished run directory, possibly with
/// a different catalog or configuration.
pub fn size_run_dir(run_dir: &Path, catalog: &ActuatorCatalog, config: &SizingConfig) -> Result<SizingReport, PipelineError> {
    let read = |k: ArtifactKind| fs::read_to_string(artifact_path(run_dir, k));
    let manifest = RunManifest::from_json(&read(ArtifactKind::Manifest)?)?;
    let model = manifest.scenario.build_model(manifest.robot)?;
    if sha256_hex(model_to_json(&model).as_bytes()) != manifest.model_hash {
        return Err(PipelineError::Artifact("model hash differs from the one recorded for this run".into()));
    }
    let traj = read_trajectory_csv(read(ArtifactKind::Trajectory)?.as_bytes()).map_err(PipelineError::Compile)?;
    let pro = read_torque_csv(read(ArtifactKind::TorquePro)?.as_bytes(), TorquePath::Pro).map_err(PipelineError::Pro)?;
    let s = &manifest.scenario;
    let (report, _) = SizingReport::compute(&model, &traj, &pro, catalog, config, &s.gravity(), &s.friction, &s.rotor_reflection)?;
    Ok(report)
}
