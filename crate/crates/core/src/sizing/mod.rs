//! Actuator sizing: joint-to-motor torque mapping, requirement extraction
//! and the two-round catalog selection.

mod catalog;
mod select;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, TorqueProfile};
use crate::model::ModelError;
use crate::trajectory::TrajectorySamples;

pub use catalog::{
    bundled_catalog, load_catalog, load_catalog_csv, motors_csv_header, gearboxes_csv_header, write_catalog_csv,
    ActuatorCatalog, CatalogFormat, Gearbox, Motor, BUNDLED_CATALOG_JSON,
};
pub use select::{
    evaluate_pair, select_round1, static_increment_estimate, validate_round2, Constraint, JointSelection, Margins,
    PairCheck, Round2Outcome, Selection, SizingReport,
};

#[derive(Debug, Error)]
pub enum SizingError {
    #[error("empty torque profile")]
    EmptyProfile,
    #[error("profile and trajectory disagree: {0}")]
    Mismatch(String),
    #[error("catalog {location}: {message}")]
    Catalog { location: String, message: String },
    #[error("joint {joint}: no feasible motor/gearbox pair, binding constraint: {binding}")]
    Infeasible { joint: usize, binding: Constraint },
    #[error("round 2 did not reach a fixed point within {iterations} iterations")]
    NoFixedPoint { iterations: usize },
    #[error("invalid sizing config: {0}")]
    Config(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Motor-side friction of one drive train.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrictionParams {
    /// N·m·s/rad at the motor shaft.
    pub viscous: f64,
    /// N·m at the motor shaft.
    pub coulomb: f64,
}

impl FrictionParams {
    pub fn is_valid(&self) -> bool {
        self.viscous >= 0.0 && self.coulomb >= 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizingConfig {
    pub sf_torque: f64,
    pub sf_speed: f64,
    pub max_round2_iterations: usize,
}

impl Default for SizingConfig {
    fn default() -> Self {
        Self { sf_torque: 1.5, sf_speed: 1.2, max_round2_iterations: 5 }
    }
}

impl SizingConfig {
    pub fn validate(&self) -> Result<(), SizingError> {
        if !(self.sf_torque >= 1.0) || !(self.sf_speed >= 1.0) || !self.sf_torque.is_finite() || !self.sf_speed.is_finite() {
            return Err(SizingError::Config(format!(
                "safety factors must be finite and >= 1 (torque {}, speed {})",
                self.sf_torque, self.sf_speed
            )));
        }
        if self.max_round2_iterations == 0 {
            return Err(SizingError::Config("max_round2_iterations must be positive".into()));
        }
        Ok(())
    }
}

pub fn radps_to_rpm(w: f64) -> f64 {
    w * 60.0 / (2.0 * PI)
}

/// Torque the motor has to produce for a given joint-side load.
///
/// Efficiency divides when the joint is driven and multiplies when the load
/// backdrives it.
pub fn motor_side_torque(tau_joint: f64, qd: f64, qdd: f64, gearbox: &Gearbox, motor: &Motor, friction: &FrictionParams) -> f64 {
    let n = gearbox.ratio;
    let eta = if tau_joint * qd >= 0.0 { gearbox.efficiency } else { 1.0 / gearbox.efficiency };
    let w_m = n * qd;
    let sgn = if w_m > 0.0 {
        1.0
    } else if w_m < 0.0 {
        -1.0
    } else {
        0.0
    };
    tau_joint / (n * eta) + motor.rotor_inertia * n * qdd + friction.viscous * w_m + friction.coulomb * sgn
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRequirements {
    pub peak_torque: f64,
    pub rms_torque: f64,
    /// rad/s
    pub peak_speed: f64,
    pub peak_speed_rpm: f64,
}

/// sqrt of the time-average of x², trapezoidal in t. A single sample is its
/// own RMS.
pub(crate) fn trapezoidal_rms(t: &[f64], x: impl Fn(usize) -> f64) -> f64 {
    match t.len() {
        0 => 0.0,
        1 => x(0).abs(),
        n => {
            let span = t[n - 1] - t[0];
            if !(span > 0.0) {
                return x(0).abs();
            }
            let mut acc = 0.0;
            let mut prev = x(0) * x(0);
            for k in 1..n {
                let cur = x(k) * x(k);
                acc += 0.5 * (prev + cur) * (t[k] - t[k - 1]);
                prev = cur;
            }
            (acc / span).sqrt()
        }
    }
}

/// Per-joint load history that selection is checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDuty {
    pub requirements: JointRequirements,
    /// Time, joint torque, speed and acceleration per sample; when empty the
    /// motor checks fall back to the driving closed form.
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    pub friction: FrictionParams,
}

impl JointDuty {
    /// Duty from aggregate figures only.
    pub fn from_requirements(requirements: JointRequirements) -> Self {
        Self { requirements, t: vec![], tau: vec![], qd: vec![], qdd: vec![], friction: FrictionParams::default() }
    }

    pub fn has_samples(&self) -> bool {
        !self.t.is_empty()
    }
}

pub fn extract_requirements(profile: &TorqueProfile, trajectory: &TrajectorySamples) -> Result<Vec<JointRequirements>, SizingError> {
    check_alignment(profile, trajectory)?;
    Ok((0..profile.n_joints())
        .map(|j| {
            let tau = profile.tau.column(j);
            let peak_speed = trajectory.qd_a.column(j).amax();
            JointRequirements {
                peak_torque: tau.amax(),
                rms_torque: trapezoidal_rms(&profile.t, |k| tau[k]),
                peak_speed,
                peak_speed_rpm: radps_to_rpm(peak_speed),
            }
        })
        .collect())
}

fn check_alignment(profile: &TorqueProfile, trajectory: &TrajectorySamples) -> Result<(), SizingError> {
    if profile.is_empty() {
        return Err(SizingError::EmptyProfile);
    }
    if profile.len() != trajectory.len() || profile.n_joints() != trajectory.n_joints() {
        return Err(SizingError::Mismatch(format!(
            "profile {}x{}, trajectory {}x{}",
            profile.len(),
            profile.n_joints(),
            trajectory.len(),
            trajectory.n_joints()
        )));
    }
    if profile.t.iter().zip(&trajectory.t).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(SizingError::Mismatch("time bases differ".into()));
    }
    Ok(())
}

/// Requirements plus per-sample history for each joint. `rotor_reflection`
/// adds a joint-side inertia term J·q̈ to the load before anything else.
pub fn joint_duties(
    profile: &TorqueProfile,
    trajectory: &TrajectorySamples,
    friction: &[FrictionParams],
    rotor_reflection: &[f64],
) -> Result<Vec<JointDuty>, SizingError> {
    check_alignment(profile, trajectory)?;
    let n = profile.n_joints();
    if (!friction.is_empty() && friction.len() != n) || (!rotor_reflection.is_empty() && rotor_reflection.len() != n) {
        return Err(SizingError::Mismatch(format!("expected {n} friction/reflection entries")));
    }
    let mut loaded = profile.clone();
    for (j, &jr) in rotor_reflection.iter().enumerate() {
        for k in 0..loaded.len() {
            loaded.tau[(k, j)] += jr * trajectory.qdd_a[(k, j)];
        }
    }
    let reqs = extract_requirements(&loaded, trajectory)?;
    Ok(reqs
        .into_iter()
        .enumerate()
        .map(|(j, requirements)| JointDuty {
            requirements,
            t: loaded.t.clone(),
            tau: loaded.tau.column(j).iter().copied().collect(),
            qd: trajectory.qd_a.column(j).iter().copied().collect(),
            qdd: trajectory.qdd_a.column(j).iter().copied().collect(),
            friction: friction.get(j).copied().unwrap_or_default(),
        })
        .collect())
}
