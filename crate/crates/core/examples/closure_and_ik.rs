//! Solve the parallelogram closure for a CR4 pose, then drive the tool to a
//! point 10 cm higher with position-only IK.

use armsizer::kinematics::{closure_residual, forward_kinematics, solve_closure, solve_ik, IkSettings};
use armsizer::math::inf_norm;
use armsizer::model::{build_cr4, ScalingLaw};
use nalgebra::{DVector, Translation3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = build_cr4(1.0, ScalingLaw::GEOMETRIC)?;
    let q = solve_closure(&model, &DVector::from_vec(vec![0.3, 0.4, -0.3, 0.0]), None)?;
    println!("q (actuated, then passive) = {:.4?}", q.as_slice());
    println!("closure residual {:.1e}", inf_norm(&closure_residual(&model, &q)?));

    let tool = model.tool_frame();
    let start = forward_kinematics(&model, &q, tool)?;
    let target = Translation3::new(0.0, 0.0, 0.1) * start;
    let solved = solve_ik(&model, &q, &target, tool, &IkSettings::for_model(&model), 1e-10, 200)?;
    let reached = forward_kinematics(&model, &solved, tool)?;
    println!("tool {:.4?} -> {:.4?}", start.translation.vector.as_slice(), reached.translation.vector.as_slice());
    println!("position error {:.1e} m", (reached.translation.vector - target.translation.vector).norm());
    println!("q after IK = {:.4?}", solved.as_slice());
    Ok(())
}
