//! Compile a small MoveJ/MoveL program and write the sampled trajectory as
//! CSV to stdout.

use armsizer::kinematics::{forward_kinematics, solve_closure};
use armsizer::model::{build_cr4, ScalingLaw};
use armsizer::trajectory::{write_trajectory_csv, MotionPrimitive, Program, Waypoint, DEFAULT_DT};
use nalgebra::{DVector, Translation3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = build_cr4(1.0, ScalingLaw::GEOMETRIC)?;
    let above = [0.5, 0.5, -0.4, 0.0];
    let q = solve_closure(&model, &DVector::from_column_slice(&above), None)?;
    let lowered = Translation3::new(0.0, 0.0, -0.15) * forward_kinematics(&model, &q, model.tool_frame())?;

    let program = Program {
        start_q: vec![0.0, 0.3, -0.2, 0.0],
        primitives: vec![
            MotionPrimitive::move_j(Waypoint::joint(&above), &[1.0; 4], &[3.0; 4]),
            MotionPrimitive::move_l(Waypoint::pose(&lowered), 0.3, 1.5),
            MotionPrimitive::move_j(Waypoint::joint(&above), &[1.0; 4], &[3.0; 4]),
        ],
        dt: DEFAULT_DT,
    };
    let traj = program.compile(&model)?;
    eprintln!("{} samples over {:.3} s, peak speeds {:.3?} rad/s", traj.len(), traj.duration(), traj.peak_speeds());
    write_trajectory_csv(&traj, std::io::stdout().lock())?;
    Ok(())
}
