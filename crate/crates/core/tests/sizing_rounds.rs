use armsizer::dynamics::pro_torque_profile;
use armsizer::model::RobotKind;
use armsizer::pipeline::ScenarioConfig;
use armsizer::sizing::{bundled_catalog, validate_round2, ActuatorCatalog, SizingConfig, SizingReport};
use armsizer::trajectory::{palletizing_cycle, PalletizingLayout};

fn benchmark_report(catalog: &ActuatorCatalog) -> SizingReport {
    let scenario = ScenarioConfig::benchmark();
    let model = scenario.build_model(RobotKind::Cr4).unwrap();
    let traj = palletizing_cycle(&model, &PalletizingLayout::default()).unwrap().compile(&model).unwrap();
    let g = scenario.gravity();
    let (pro, _) = pro_torque_profile(&model, &traj, &g).unwrap();
    SizingReport::compute(&model, &traj, &pro, catalog, &SizingConfig::default(), &g, &[], &[]).unwrap().0
}

fn parts(report: &SizingReport, round2: bool) -> Vec<(String, String)> {
    let sel = if round2 { &report.round2 } else { &report.round1 };
    sel.joints.iter().map(|j| (j.motor.clone(), j.gearbox.clone())).collect()
}

#[test]
fn massless_parts_leave_round_one_standing() {
    let mut catalog = bundled_catalog();
    catalog.motors.iter_mut().for_each(|m| m.mass = 0.0);
    catalog.gearboxes.iter_mut().for_each(|g| g.mass = 0.0);
    let report = benchmark_report(&catalog);
    assert_eq!(parts(&report, false), parts(&report, true));
    assert!(report.round2.joints.iter().all(|j| !j.changed));
    assert_eq!(report.round2_iterations, 1);
    assert_eq!(report.requirements_round1, report.requirements_round2);
}

#[test]
fn round_two_is_a_fixed_point() {
    let catalog = bundled_catalog();
    let report = benchmark_report(&catalog);
    let scenario = ScenarioConfig::benchmark();
    let model = scenario.build_model(RobotKind::Cr4).unwrap();
    let traj = palletizing_cycle(&model, &PalletizingLayout::default()).unwrap().compile(&model).unwrap();
    let again =
        validate_round2(&report.round2, &model, &traj, &catalog, &SizingConfig::default(), &scenario.gravity(), &[], &[])
            .unwrap();
    assert_eq!(again.iterations, 1);
    assert!(again.selection.joints.iter().all(|j| !j.changed));
    let same: Vec<(String, String)> = again.selection.joints.iter().map(|j| (j.motor.clone(), j.gearbox.clone())).collect();
    assert_eq!(same, parts(&report, true));
}
