//! Rigid-body dynamics: recursive Newton–Euler, mass matrix, constrained
//! inverse/forward dynamics, and the serial surrogate used for fast
//! approximate torques.

mod kkt;
mod profile;
mod rnea;
mod serial;

use thiserror::Error;

use crate::kinematics::KinematicsError;
use crate::model::ModelError;

pub use kkt::{
    constrained_forward_dynamics, constrained_inverse_dynamics, constrained_inverse_dynamics_staged, rollout,
    ConstrainedIdResult, Rollout, RolloutSettings, SOLVED_TOLERANCE,
};
pub use profile::{
    demo_torque_profile, pro_torque_profile, read_torque_csv, torque_csv_header, write_torque_csv, ProDiagnostics,
    TorquePath, TorqueProfile,
};
pub use rnea::{
    dynamics_terms, kinetic_energy, mass_matrix, mass_matrix_by_rnea, potential_energy, rnea, DynamicsTerms,
    STANDARD_GRAVITY,
};
pub use serial::{demo_inverse_dynamics, lump_serial_model, serial_coordinates};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("configuration does not satisfy the closure (residual {residual:e})")]
    Unsolved { residual: f64 },
    #[error("KKT matrix is singular (condition {condition:e})")]
    SingularKkt { condition: f64 },
    #[error("model has loop closures or passive joints; a serial model is required")]
    NotSerial,
    #[error("sample {sample}: {source}")]
    AtSample { sample: usize, source: Box<DynamicsError> },
    #[error("torque file: {0}")]
    Format(String),
}
