//! DEMO (serial surrogate) against PRO (closed chain) torques on the benchmark
//! cycle, with the agreement gate applied.

use armsizer::analysis::{agreement_gate, compare_profiles, write_metrics_csv, GateThresholds};
use armsizer::dynamics::{demo_torque_profile, lump_serial_model, pro_torque_profile};
use armsizer::model::RobotKind;
use armsizer::pipeline::ScenarioConfig;
use armsizer::trajectory::{palletizing_cycle, PalletizingLayout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = ScenarioConfig::benchmark();
    let model = scenario.build_model(RobotKind::Cr4)?;
    let g = scenario.gravity();
    let traj = palletizing_cycle(&model, &PalletizingLayout::default())?.compile(&model)?;

    let (pro, diag) = pro_torque_profile(&model, &traj, &g)?;
    let demo = demo_torque_profile(&lump_serial_model(&model)?, &traj, &g)?;
    println!("PRO worst relative KKT residual {:.1e}", diag.max_relative_kkt_residual);

    let metrics = compare_profiles(&demo, &pro)?;
    write_metrics_csv(&metrics, std::io::stdout().lock())?;
    for v in agreement_gate(&metrics, &GateThresholds::default()) {
        let verdict = if v.pass { "pass" } else { "fail" };
        println!("{} {verdict} {}", v.joint, v.reasons.join("; "));
    }
    Ok(())
}
