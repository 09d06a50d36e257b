//! Full benchmark run: palletizing cycle on the scaled CR4, both torque paths,
//! agreement metrics and two-round sizing. Artifacts go to the directory given
//! as the first argument (default `target/benchmark_run`).

use std::path::PathBuf;
use std::time::Instant;

use armsizer::pipeline::{run_pipeline, RunInputs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("target/benchmark_run"));
    let inputs = RunInputs::benchmark()?;
    let start = Instant::now();
    let results = run_pipeline(&inputs, Some(&dir), &mut |stage| println!("stage {}", stage.label()))?;
    println!("{} samples, cycle {:.3} s, computed in {:.2?}", results.trajectory.len(), results.trajectory.duration(), start.elapsed());

    println!("\njoint  corr       rmse    bias");
    for m in &results.metrics.joints {
        let corr = m.correlation.map_or("undefined".to_string(), |c| format!("{c:.6}"));
        println!("{:<6} {:<10} {:<7.3} {:.3}", m.joint, corr, m.rmse, m.bias);
    }

    println!("\njoint  peak Nm   rms Nm    speed rpm");
    for (j, r) in results.sizing.requirements_round1.iter().enumerate() {
        println!("J{:<5} {:<9.3} {:<9.3} {:.3}", j + 1, r.peak_torque, r.rms_torque, r.peak_speed_rpm);
    }

    println!("\njoint  round 1                          round 2");
    for (a, b) in results.sizing.round1.joints.iter().zip(&results.sizing.round2.joints) {
        let r1 = format!("{} + {}", a.motor, a.gearbox);
        let mark = if b.changed { " (changed)" } else { "" };
        println!("{:<6} {:<32} {} + {}{}", a.joint, r1, b.motor, b.gearbox, mark);
    }
    println!("round 2 converged in {} iteration(s)", results.sizing.round2_iterations);
    println!("artifacts in {}", dir.display());
    Ok(())
}
