//! Build the CR4 and CR6 at a few scales and print reach, mass and the
//! scaling factors applied to each link.

use armsizer::model::{build_cr4, build_cr6, reach, validate_model, ScalingLaw};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("robot  s     law         reach m   mass kg");
    for (name, law) in [("geometric", ScalingLaw::GEOMETRIC), ("calibrated", ScalingLaw::CALIBRATED)] {
        for s in [1.0, 1.3, 1.6] {
            let cr4 = build_cr4(s, law)?;
            assert!(validate_model(&cr4).is_empty());
            println!("CR4    {s:<5} {name:<11} {:<9.4} {:.2}", reach(&cr4)?, cr4.total_mass());
        }
    }
    let cr6 = build_cr6(1.0, ScalingLaw::GEOMETRIC)?;
    println!("CR6    1.0   geometric   {:<9.4} {:.2}", reach(&cr6)?, cr6.total_mass());

    let law = ScalingLaw::CALIBRATED;
    println!("\ncalibrated at s = 1.6: mass x{:.4}, inertia x{:.4}", law.mass_factor(1.6), law.inertia_factor(1.6));
    let cr4 = build_cr4(1.6, law)?;
    for link in cr4.links() {
        println!("  {:<12} {:.3} kg", link.name, link.inertia.mass);
    }
    Ok(())
}
