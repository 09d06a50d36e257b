//! Waypoint programs compiled into uniformly sampled actuated-joint
//! trajectories with trapezoidal velocity profiles.

mod fixture;
mod io;
mod pchip;
mod plan;
mod profile;

use nalgebra::{DMatrix, DVector, Isometry3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::KinematicsError;
use crate::model::{ModelError, TransformDoc};

pub use fixture::{palletizing_cycle, PalletizingLayout};
pub use io::{read_trajectory_csv, trajectory_csv_header, write_trajectory_csv, TrajectoryManifest};
pub use pchip::Pchip;
pub use plan::{compile_program, plan_movej, plan_movel, sample_segments, Segment, IK_TOLERANCE};
pub use profile::{trapezoid_profile, TrapezoidProfile};

/// Default sampling period, s.
pub const DEFAULT_DT: f64 = 0.004;
/// Default MoveL path discretization before time resampling, m.
pub const DEFAULT_SAMPLE_DS: f64 = 0.002;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("distance must be finite and non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("velocity and acceleration limits must be positive")]
    NonPositiveLimit,
    #[error("sampling period must be positive, got {0}")]
    InvalidDt(f64),
    #[error("program has no primitives")]
    EmptyProgram,
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{joint} target {value} outside limits [{lower}, {upper}]")]
    JointLimit { joint: String, value: f64, lower: f64, upper: f64 },
    #[error("{joint} commanded speed {vmax} exceeds its limit {limit}")]
    CommandedSpeed { joint: String, vmax: f64, limit: f64 },
    #[error("{joint} speed {speed} at path sample {sample} exceeds its limit {limit}")]
    VelocityLimitExceeded { joint: String, sample: usize, speed: f64, limit: f64 },
    #[error("{0:?} primitive needs {1} limits")]
    LimitShape(MotionKind, &'static str),
    #[error("IK failed at path sample {sample}: {source}")]
    Ik { sample: usize, source: KinematicsError },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trajectory file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waypoint {
    Joint { joint_target: Vec<f64> },
    Cartesian { pose_target: TransformDoc },
}

impl Waypoint {
    pub fn joint(q: &[f64]) -> Self {
        Waypoint::Joint { joint_target: q.to_vec() }
    }

    pub fn pose(pose: &Isometry3<f64>) -> Self {
        Waypoint::Cartesian { pose_target: TransformDoc::from(pose) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionKind {
    MoveJ,
    MoveL,
}

/// Per-joint limits (MoveJ) or a single path limit (MoveL).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Limit {
    Scalar(f64),
    PerJoint(Vec<f64>),
}

impl Limit {
    fn positive(&self) -> bool {
        match self {
            Limit::Scalar(v) => *v > 0.0 && v.is_finite(),
            Limit::PerJoint(v) => !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub kind: MotionKind,
    pub target: Waypoint,
    pub vmax: Limit,
    pub amax: Limit,
}

impl MotionPrimitive {
    pub fn move_j(target: Waypoint, vmax: &[f64], amax: &[f64]) -> Self {
        Self { kind: MotionKind::MoveJ, target, vmax: Limit::PerJoint(vmax.to_vec()), amax: Limit::PerJoint(amax.to_vec()) }
    }

    pub fn move_l(target: Waypoint, vmax: f64, amax: f64) -> Self {
        Self { kind: MotionKind::MoveL, target, vmax: Limit::Scalar(vmax), amax: Limit::Scalar(amax) }
    }
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

/// Program document: start configuration, ordered primitives, sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub start_q: Vec<f64>,
    pub primitives: Vec<MotionPrimitive>,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Program {
    pub fn compile(&self, model: &crate::model::RigidBodyModel) -> Result<TrajectorySamples, TrajectoryError> {
        compile_program(model, &DVector::from_column_slice(&self.start_q), &self.primitives, self.dt)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrajectoryError> {
        serde_json::from_str(text).map_err(|e| TrajectoryError::Format(e.to_string()))
    }
}

/// Uniformly sampled actuated trajectory. Rows are samples, columns joints.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySamples {
    pub dt: f64,
    pub t: Vec<f64>,
    pub q_a: DMatrix<f64>,
    pub qd_a: DMatrix<f64>,
    pub qdd_a: DMatrix<f64>,
    /// First sample index of each primitive.
    pub primitive_boundaries: Vec<usize>,
}

impl TrajectorySamples {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n_joints(&self) -> usize {
        self.q_a.ncols()
    }

    pub fn duration(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    /// (q_a, q̇_a, q̈_a) at sample `k`.
    pub fn state(&self, k: usize) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        (
            self.q_a.row(k).transpose(),
            self.qd_a.row(k).transpose(),
            self.qdd_a.row(k).transpose(),
        )
    }

    /// Largest |q̇| per joint.
    pub fn peak_speeds(&self) -> Vec<f64> {
        (0..self.n_joints()).map(|j| self.qd_a.column(j).amax()).collect()
    }
}
