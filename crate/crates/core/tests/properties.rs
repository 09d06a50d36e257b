use armsizer::analysis::compare_traces;
use armsizer::dynamics::{TorquePath, TorqueProfile};
use armsizer::kinematics::{closure_residual, forward_kinematics, solve_closure};
use armsizer::math::inf_norm;
use armsizer::model::{build_cr4, reach, validate_model, ScalingLaw};
use armsizer::sizing::{
    bundled_catalog, evaluate_pair, extract_requirements, motor_side_torque, FrictionParams, JointDuty, JointRequirements,
    SizingConfig,
};
use armsizer::trajectory::{trapezoid_profile, TrajectorySamples};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn traces() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..60).prop_flat_map(|n| (prop::collection::vec(-500.0..500.0, n), prop::collection::vec(-500.0..500.0, n)))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn swapping_traces_negates_bias((d, p) in traces()) {
        let ab = compare_traces("J", &d, &p).unwrap();
        let ba = compare_traces("J", &p, &d).unwrap();
        prop_assert!(close(ab.bias, -ba.bias, 1e-12));
        prop_assert!(close(ab.rmse, ba.rmse, 1e-12));
        match (ab.correlation, ba.correlation) {
            (Some(x), Some(y)) => prop_assert!(close(x, y, 1e-12)),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn metrics_scale_with_the_traces((d, p) in traces(), c in 0.01f64..100.0) {
        let base = compare_traces("J", &d, &p).unwrap();
        let ds: Vec<f64> = d.iter().map(|v| v * c).collect();
        let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
        let scaled = compare_traces("J", &ds, &ps).unwrap();
        prop_assert!(close(scaled.rmse, c * base.rmse, 1e-10));
        prop_assert!(close(scaled.bias, c * base.bias, 1e-10));
        if let (Some(x), Some(y)) = (base.correlation, scaled.correlation) {
            prop_assert!(close(x, y, 1e-9));
            prop_assert!((-1.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn rmse_splits_into_bias_and_spread((d, p) in traces()) {
        let m = compare_traces("J", &d, &p).unwrap();
        let n = d.len() as f64;
        let var = d.iter().zip(&p).map(|(a, b)| (a - b - m.bias).powi(2)).sum::<f64>() / n;
        prop_assert!(close(m.rmse * m.rmse, m.bias * m.bias + var, 1e-9));
    }

    #[test]
    fn motor_torque_is_odd(tau in -500.0f64..500.0, qd in -3.0f64..3.0, qdd in -10.0f64..10.0,
                           gi in 0usize..8, mi in 0usize..8, viscous in 0.0f64..0.01, coulomb in 0.0f64..0.5) {
        let catalog = bundled_catalog();
        let g = &catalog.gearboxes[gi % catalog.gearboxes.len()];
        let m = &catalog.motors[mi % catalog.motors.len()];
        let f = FrictionParams { viscous, coulomb };
        let fwd = motor_side_torque(tau, qd, qdd, g, m, &f);
        let back = motor_side_torque(-tau, -qd, -qdd, g, m, &f);
        prop_assert!(close(fwd, -back, 1e-12));
    }

    /// A pair that passes at a stricter safety factor passes at a looser one.
    #[test]
    fn feasibility_shrinks_as_safety_factors_grow(peak in 1.0f64..600.0, ratio in 0.05f64..1.0, speed in 0.0f64..3.0,
                                                  sf_lo in 1.0f64..2.0, extra in 0.0f64..1.0) {
        let duty = JointDuty::from_requirements(JointRequirements {
            peak_torque: peak,
            rms_torque: peak * ratio,
            peak_speed: speed,
            peak_speed_rpm: speed * 60.0 / std::f64::consts::TAU,
        });
        let lo = SizingConfig { sf_torque: sf_lo, sf_speed: sf_lo, ..SizingConfig::default() };
        let hi = SizingConfig { sf_torque: sf_lo + extra, sf_speed: sf_lo + extra, ..SizingConfig::default() };
        let catalog = bundled_catalog();
        for m in &catalog.motors {
            for g in &catalog.gearboxes {
                if evaluate_pair(&duty, m, g, &hi).feasible() {
                    prop_assert!(evaluate_pair(&duty, m, g, &lo).feasible(), "{} + {}", m.name, g.name);
                }
            }
        }
    }

    #[test]
    fn rms_never_exceeds_peak(cols in prop::collection::vec(prop::collection::vec(-300.0f64..300.0, 40), 1..5),
                              dt in 0.001f64..0.05) {
        let (n, k) = (cols[0].len(), cols.len());
        let tau = DMatrix::from_fn(n, k, |r, c| cols[c][r]);
        let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let qd = DMatrix::from_fn(n, k, |r, c| (r as f64 * 0.1 + c as f64).sin());
        let profile = TorqueProfile { t: t.clone(), tau, path: TorquePath::Pro, motor_side: None };
        let traj = TrajectorySamples {
            dt,
            t,
            q_a: DMatrix::zeros(n, k),
            qd_a: qd.clone(),
            qdd_a: DMatrix::zeros(n, k),
            primitive_boundaries: vec![0],
        };
        for (j, r) in extract_requirements(&profile, &traj).unwrap().iter().enumerate() {
            prop_assert!(r.rms_torque <= r.peak_torque * (1.0 + 1e-12));
            prop_assert!(close(r.peak_speed, qd.column(j).amax(), 1e-15));
        }
    }

    #[test]
    fn reach_and_mass_follow_the_scaling_law(s in 0.3f64..3.0, a in 1.0f64..3.0, b in 3.0f64..5.0) {
        let law = ScalingLaw { mass_exponent: a, inertia_exponent: b };
        let base = build_cr4(1.0, law).unwrap();
        let m = build_cr4(s, law).unwrap();
        prop_assert!(validate_model(&m).is_empty());
        prop_assert!(close(reach(&m).unwrap(), 0.945 * s, 1e-12));
        prop_assert!(close(m.total_mass(), base.total_mass() * s.powf(a), 1e-12));
    }

    #[test]
    fn closure_solves_onto_the_parallelogram(q1 in -3.0f64..3.0, q2 in -0.4f64..1.0, q3 in -0.9f64..0.6, q4 in -3.0f64..3.0) {
        prop_assume!((q3 - q2).abs() <= 1.2);
        let model = build_cr4(1.0, ScalingLaw::GEOMETRIC).unwrap();
        let q = solve_closure(&model, &DVector::from_vec(vec![q1, q2, q3, q4]), None).unwrap();
        prop_assert!(inf_norm(&closure_residual(&model, &q).unwrap()) <= 1e-10);
        prop_assert!((q[4] - (q3 - q2)).abs() <= 1e-9);
        prop_assert!((q[5] - (q2 - q3)).abs() <= 1e-9);
    }

    /// J1 turns the whole arm about the vertical axis.
    #[test]
    fn base_yaw_rotates_the_tool(q2 in -0.4f64..1.0, q3 in -0.9f64..0.6, yaw in -3.0f64..3.0) {
        prop_assume!((q3 - q2).abs() <= 1.2);
        let model = build_cr4(1.0, ScalingLaw::GEOMETRIC).unwrap();
        let tool = |q1: f64| {
            let q = solve_closure(&model, &DVector::from_vec(vec![q1, q2, q3, 0.0]), None).unwrap();
            forward_kinematics(&model, &q, model.tool_frame()).unwrap().translation.vector
        };
        let (p0, p1) = (tool(0.0), tool(yaw));
        let (c, s) = (yaw.cos(), yaw.sin());
        prop_assert!((p1.x - (c * p0.x - s * p0.y)).abs() <= 1e-9);
        prop_assert!((p1.y - (s * p0.x + c * p0.y)).abs() <= 1e-9);
        prop_assert!((p1.z - p0.z).abs() <= 1e-9);
    }

    #[test]
    fn trapezoid_respects_its_limits(d in 0.0f64..5.0, vmax in 0.05f64..3.0, amax in 0.05f64..10.0) {
        let p = trapezoid_profile(d, vmax, amax).unwrap();
        prop_assert!(p.peak_velocity <= vmax * (1.0 + 1e-12));
        prop_assert!(p.duration * vmax >= d * (1.0 - 1e-12));
        prop_assert!(close(p.sample(p.duration).0, d, 1e-12));
        let mut last = 0.0;
        for i in 0..=50 {
            let (s, v, a) = p.sample(p.duration * i as f64 / 50.0);
            prop_assert!(s >= last - 1e-12 && v >= -1e-12 && v <= vmax * (1.0 + 1e-12) && a.abs() <= amax * (1.0 + 1e-12));
            last = s;
        }
    }
}
