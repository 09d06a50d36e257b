use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kkt::constrained_inverse_dynamics;
use super::serial::demo_inverse_dynamics;
use super::DynamicsError;
use crate::kinematics::ClosureSolver;
use crate::math::{inf_norm, Vec3};
use crate::model::RigidBodyModel;
use crate::table::{read_table, write_table};
use crate::trajectory::TrajectorySamples;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TorquePath {
    /// Serial surrogate, plain Newton–Euler.
    Demo,
    /// Closed chain through the KKT system.
    Pro,
}

impl TorquePath {
    pub fn label(self) -> &'static str {
        match self {
            TorquePath::Demo => "demo",
            TorquePath::Pro => "pro",
        }
    }
}

/// Actuated joint torques along a trajectory, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TorqueProfile {
    pub t: Vec<f64>,
    pub tau: DMatrix<f64>,
    pub path: TorquePath,
    /// Motor-side torques once a drive train has been applied.
    pub motor_side: Option<DMatrix<f64>>,
}

impl TorqueProfile {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n_joints(&self) -> usize {
        self.tau.ncols()
    }
}

/// Worst-case solver figures over a PRO profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProDiagnostics {
    pub max_kkt_residual: f64,
    /// Max over samples of residual / (1 + ‖h‖∞).
    pub max_relative_kkt_residual: f64,
    pub max_closure_residual: f64,
}

fn at(sample: usize) -> impl Fn(DynamicsError) -> DynamicsError {
    move |e| DynamicsError::AtSample { sample, source: Box::new(e) }
}

/// Closed-chain torques at every sample. Closures are solved sequentially
/// (each warm-started from the previous sample), then the per-sample KKT
/// solves run in parallel.
pub fn pro_torque_profile(
    model: &RigidBodyModel,
    trajectory: &TrajectorySamples,
    gravity: &Vec3,
) -> Result<(TorqueProfile, ProDiagnostics), DynamicsError> {
    let (n_a, n_p) = (model.n_actuated(), model.n_passive());
    if trajectory.n_joints() != n_a {
        return Err(crate::kinematics::KinematicsError::Dimension { expected: n_a, got: trajectory.n_joints() }.into());
    }
    let solver = ClosureSolver::default();
    let mut configs = Vec::with_capacity(trajectory.len());
    let mut seed: Option<DVector<f64>> = None;
    for k in 0..trajectory.len() {
        let q_a = trajectory.q_a.row(k).transpose();
        let q = solver.solve(model, &q_a, seed.as_ref()).map_err(|e| at(k)(e.into()))?;
        seed = Some(q.rows(n_a, n_p).into_owned());
        configs.push(q);
    }

    let results: Vec<_> = configs
        .par_iter()
        .enumerate()
        .map(|(k, q)| {
            let (_, qd, qdd) = trajectory.state(k);
            let r = constrained_inverse_dynamics(model, q, &qd, &qdd, gravity).map_err(at(k))?;
            let closure = if model.closures().is_empty() {
                0.0
            } else {
                inf_norm(&crate::kinematics::closure_residual(model, q).map_err(|e| at(k)(e.into()))?)
            };
            Ok((r, closure))
        })
        .collect::<Result<_, DynamicsError>>()?;

    let mut tau = DMatrix::zeros(trajectory.len(), n_a);
    let mut diag = ProDiagnostics::default();
    for (k, (r, closure)) in results.iter().enumerate() {
        tau.set_row(k, &r.tau_a.transpose());
        diag.max_kkt_residual = diag.max_kkt_residual.max(r.kkt_residual);
        diag.max_relative_kkt_residual = diag.max_relative_kkt_residual.max(r.kkt_residual / (1.0 + r.bias_norm));
        diag.max_closure_residual = diag.max_closure_residual.max(*closure);
    }
    Ok((TorqueProfile { t: trajectory.t.clone(), tau, path: TorquePath::Pro, motor_side: None }, diag))
}

/// Serial-surrogate torques at every sample, mapped to the original
/// actuated joints.
pub fn demo_torque_profile(
    model_demo: &RigidBodyModel,
    trajectory: &TrajectorySamples,
    gravity: &Vec3,
) -> Result<TorqueProfile, DynamicsError> {
    let n_a = model_demo.n_actuated();
    if trajectory.n_joints() != n_a {
        return Err(crate::kinematics::KinematicsError::Dimension { expected: n_a, got: trajectory.n_joints() }.into());
    }
    let rows: Vec<DVector<f64>> = (0..trajectory.len())
        .into_par_iter()
        .map(|k| {
            let (q, qd, qdd) = trajectory.state(k);
            demo_inverse_dynamics(model_demo, &q, &qd, &qdd, gravity).map_err(at(k))
        })
        .collect::<Result<_, _>>()?;
    let mut tau = DMatrix::zeros(trajectory.len(), n_a);
    for (k, row) in rows.iter().enumerate() {
        tau.set_row(k, &row.transpose());
    }
    Ok(TorqueProfile { t: trajectory.t.clone(), tau, path: TorquePath::Demo, motor_side: None })
}

/// `t,tau1..tau{n}`
pub fn torque_csv_header(n_a: usize) -> Vec<String> {
    std::iter::once("t".to_string()).chain((1..=n_a).map(|j| format!("tau{j}"))).collect()
}

pub fn write_torque_csv<W: Write>(profile: &TorqueProfile, writer: W) -> Result<(), DynamicsError> {
    let rows = (0..profile.len()).map(|k| std::iter::once(profile.t[k]).chain(profile.tau.row(k).iter().copied()).collect());
    write_table(writer, &torque_csv_header(profile.n_joints()), rows).map_err(|e| DynamicsError::Format(e.to_string()))
}

pub fn read_torque_csv<R: Read>(reader: R, path: TorquePath) -> Result<TorqueProfile, DynamicsError> {
    let (header, rows) = read_table(reader).map_err(|e| DynamicsError::Format(e.to_string()))?;
    if header.len() < 2 || header != torque_csv_header(header.len() - 1) {
        return Err(DynamicsError::Format(format!("unexpected header {header:?}")));
    }
    let n = header.len() - 1;
    Ok(TorqueProfile {
        t: rows.iter().map(|r| r[0]).collect(),
        tau: DMatrix::from_fn(rows.len(), n, |i, j| rows[i][1 + j]),
        path,
        motor_side: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lump_serial_model, STANDARD_GRAVITY};
    use crate::model::{build_cr4, ScalingLaw};
    use crate::trajectory::{palletizing_cycle, PalletizingLayout};

    #[test]
    fn cycle_profiles_have_trajectory_shape() {
        let m = build_cr4(1.6, ScalingLaw::CALIBRATED).unwrap();
        let mut layout = PalletizingLayout::default();
        layout.dt = 0.02;
        let traj = palletizing_cycle(&m, &layout).unwrap().compile(&m).unwrap();
        let (pro, diag) = pro_torque_profile(&m, &traj, &STANDARD_GRAVITY).unwrap();
        let demo = demo_torque_profile(&lump_serial_model(&m).unwrap(), &traj, &STANDARD_GRAVITY).unwrap();
        assert_eq!(pro.tau.shape(), (traj.len(), 4));
        assert_eq!(demo.tau.shape(), pro.tau.shape());
        assert!(diag.max_relative_kkt_residual <= 1e-9, "{diag:?}");
        assert!(diag.max_closure_residual <= 1e-10);

        let mut buf = Vec::new();
        write_torque_csv(&pro, &mut buf).unwrap();
        let back = read_torque_csv(buf.as_slice(), TorquePath::Pro).unwrap();
        assert_eq!(back, pro);
    }
}
