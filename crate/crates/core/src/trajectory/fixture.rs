use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{MotionPrimitive, Program, TrajectoryError, Waypoint, DEFAULT_DT};
use crate::kinematics::{forward_kinematics, solve_closure};
use crate::model::RigidBodyModel;

/// Joint-space stations and limits of the palletizing benchmark cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PalletizingLayout {
    pub home: [f64; 4],
    pub above_pick: [f64; 4],
    pub above_place: [f64; 4],
    /// Vertical approach and retreat, m.
    pub descent: f64,
    pub joint_vmax: [f64; 4],
    pub joint_amax: [f64; 4],
    pub path_vmax: f64,
    pub path_amax: f64,
    pub dt: f64,
}

impl Default for PalletizingLayout {
    fn default() -> Self {
        Self {
            home: [-0.8, 1.35, 0.1, 0.0],
            above_pick: [-0.8, 0.5, -0.6, 0.0],
            above_place: [0.8, 0.5, -0.6, 0.0],
            descent: 0.3,
            joint_vmax: [1.2, 1.2, 1.2, 1.2],
            joint_amax: [2.0, 3.0, 3.0, 3.0],
            path_vmax: 0.5,
            path_amax: 2.0,
            dt: DEFAULT_DT,
        }
    }
}

/// home → above-pick → pick → above-pick → above-place → place →
/// above-place → home, with J4 held constant. The vertical legs are MoveL.
pub fn palletizing_cycle(model: &RigidBodyModel, layout: &PalletizingLayout) -> Result<Program, TrajectoryError> {
    if model.n_actuated() != 4 {
        return Err(TrajectoryError::Dimension { expected: 4, got: model.n_actuated() });
    }
    let tool = |q: &[f64; 4]| -> Result<_, TrajectoryError> {
        let full = solve_closure(model, &DVector::from_column_slice(q), None)?;
        Ok(forward_kinematics(model, &full, model.tool_frame())?)
    };
    let lowered = |q: &[f64; 4]| -> Result<Waypoint, TrajectoryError> {
        let mut pose = tool(q)?;
        pose.translation.vector.z -= layout.descent;
        Ok(Waypoint::pose(&pose))
    };
    let joint = |q: &[f64; 4]| MotionPrimitive::move_j(Waypoint::joint(q), &layout.joint_vmax, &layout.joint_amax);
    let line = |w: Waypoint| MotionPrimitive::move_l(w, layout.path_vmax, layout.path_amax);

    let primitives = vec![
        joint(&layout.above_pick),
        line(lowered(&layout.above_pick)?),
        line(Waypoint::pose(&tool(&layout.above_pick)?)),
        joint(&layout.above_place),
        line(lowered(&layout.above_place)?),
        line(Waypoint::pose(&tool(&layout.above_place)?)),
        joint(&layout.home),
    ];
    Ok(Program { start_q: layout.home.to_vec(), primitives, dt: layout.dt })
}
