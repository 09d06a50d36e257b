//! Size actuators for the benchmark cycle by hand: requirements from the PRO
//! profile, round-1 selection, then the mass-loaded round-2 check.

use armsizer::dynamics::pro_torque_profile;
use armsizer::model::RobotKind;
use armsizer::pipeline::ScenarioConfig;
use armsizer::sizing::{bundled_catalog, joint_duties, select_round1, validate_round2, SizingConfig};
use armsizer::trajectory::{palletizing_cycle, PalletizingLayout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = ScenarioConfig::benchmark();
    let model = scenario.build_model(RobotKind::Cr4)?;
    let g = scenario.gravity();
    let traj = palletizing_cycle(&model, &PalletizingLayout::default())?.compile(&model)?;
    let (pro, _) = pro_torque_profile(&model, &traj, &g)?;

    let catalog = bundled_catalog();
    let config = SizingConfig::default();
    let duties = joint_duties(&pro, &traj, &[], &[])?;
    for (j, d) in duties.iter().enumerate() {
        let r = &d.requirements;
        println!("J{}  peak {:.1} N·m  rms {:.1} N·m  {:.2} rpm", j + 1, r.peak_torque, r.rms_torque, r.peak_speed_rpm);
    }

    let round1 = select_round1(&duties, &catalog, &config)?;
    let round2 = validate_round2(&round1, &model, &traj, &catalog, &config, &g, &[], &[])?;
    println!("\nround 2 settled after {} iteration(s)", round2.iterations);
    for (a, b) in round1.joints.iter().zip(&round2.selection.joints) {
        let mark = if b.changed { "  (changed)" } else { "" };
        println!("{}  {} + {}  ->  {} + {}{mark}", a.joint, a.motor, a.gearbox, b.motor, b.gearbox);
        let show = |m: Option<f64>| m.map_or("n/a".to_string(), |v| format!("{v:.2}"));
        let m = &b.margins;
        println!("    margins: peak {}, rms {}, speed {}", show(m.torque_peak), show(m.torque_rms), show(m.speed));
    }
    Ok(())
}
