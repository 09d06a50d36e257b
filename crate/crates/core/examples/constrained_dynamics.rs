//! Closed-chain inverse and forward dynamics on the benchmark arm, then a
//! one-second rollout under a holding torque plus a sinusoid with its energy
//! bookkeeping.

use std::f64::consts::PI;

use armsizer::dynamics::{constrained_forward_dynamics, constrained_inverse_dynamics, rollout, RolloutSettings};
use armsizer::kinematics::solve_closure;
use armsizer::model::RobotKind;
use armsizer::pipeline::ScenarioConfig;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = ScenarioConfig::benchmark();
    let model = scenario.build_model(RobotKind::Cr4)?;
    let g = scenario.gravity();
    let q = solve_closure(&model, &DVector::from_vec(vec![0.3, 0.4, -0.3, 0.2]), None)?;

    let qd_a = DVector::from_vec(vec![0.5, -0.3, 0.4, 0.0]);
    let qdd_a = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
    let id = constrained_inverse_dynamics(&model, &q, &qd_a, &qdd_a, &g)?;
    println!("tau_a  = {:.3?} N·m", id.tau_a.as_slice());
    println!("lambda = {:.3?}", id.lambda.as_slice());
    println!("KKT residual {:.1e} (bias norm {:.1})", id.kkt_residual, id.bias_norm);
    let (qdd, _) = constrained_forward_dynamics(&model, &q, &id.qd, &id.tau_a, &g)?;
    println!("forward dynamics recovers qdd_a to {:.1e}", (qdd.rows(0, 4) - &qdd_a).amax());

    let zero = DVector::zeros(4);
    let hold = constrained_inverse_dynamics(&model, &q, &zero, &zero, &g)?.tau_a;
    let amp = DVector::from_vec(vec![40.0, 60.0, 40.0, 1.0]);
    let settings = RolloutSettings { dt: 1e-3, duration: 1.0, reproject: false, record_every: 100 };
    let run = rollout(&model, &q, &DVector::zeros(model.n()), |t, _, _| &hold + &amp * (2.0 * PI * t).sin(), &g, &settings)?;
    println!("\n t s    energy J    work J     E - E0 - W");
    for k in 0..run.t.len() {
        let gap = run.energy[k] - run.energy[0] - run.work[k];
        println!("{:.2}   {:<10.4} {:<10.4} {gap:.1e}", run.t[k], run.energy[k], run.work[k]);
    }
    println!("closure drift {:.1e}", run.max_closure_residual);
    Ok(())
}
