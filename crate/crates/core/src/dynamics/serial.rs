//! Serial surrogate of the CR4 used by the fast approximate path.
//!
//! The parallelogram is replaced by a five-joint chain (J1, J2, a serial
//! elbow J3′ = q3 − q2, the fixed wrist mount, J4). Crank and tie-rod
//! masses are apportioned to the upper arm, and both lumped COMs are placed
//! so the first moment of every rigidly co-rotating group matches the
//! closed chain. Gravity torques are therefore identical at every pose;
//! only the inertial terms differ.

use nalgebra::{DVector, Isometry3};

use super::rnea::rnea;
use super::DynamicsError;
use crate::kinematics::{check_len, KinematicState};
use crate::math::Vec3;
use crate::model::{JointRole, LinkInertia, ModelError, ModelParts, RigidBodyModel, RobotKind};

const REQUIRED_LINKS: [&str; 4] = ["upper_arm", "forearm", "crank", "tie_rod"];
const REQUIRED_JOINTS: [&str; 6] = ["J1", "J2", "J3", "J4", "elbow", "tie_rod_pin"];

fn not_cr4(msg: impl Into<String>) -> DynamicsError {
    DynamicsError::Model(ModelError::NotCr4(msg.into()))
}

/// Build the serial surrogate of a CR4-topology model.
pub fn lump_serial_model(model: &RigidBodyModel) -> Result<RigidBodyModel, DynamicsError> {
    if model.kind() != RobotKind::Cr4 {
        return Err(not_cr4(format!("kind is {:?}", model.kind())));
    }
    for name in REQUIRED_LINKS {
        model.link_index(name).ok_or_else(|| not_cr4(format!("missing link `{name}`")))?;
    }
    for name in REQUIRED_JOINTS {
        model.joint_index(name).ok_or_else(|| not_cr4(format!("missing joint `{name}`")))?;
    }

    // Relative placements at the reference pose (actuated zero).
    let mut q_ref = DVector::zeros(model.n());
    q_ref.rows_mut(model.n_actuated(), model.n_passive()).copy_from_slice(&model.parts().reference_passive);
    let state = KinematicState::compute(model, &q_ref)?;
    let pose = |name: &str| state.links[model.link_index(name).unwrap()];
    let inertia = |name: &str| model.links()[model.link_index(name).unwrap()].inertia.clone();

    let upper = pose("upper_arm");
    let forearm = pose("forearm");
    let crank_pose = pose("crank");
    let tie_pose = pose("tie_rod");
    // Rotation-only re-expression of a link's inertia in another link's axes.
    let reoriented = |frame: &Isometry3<f64>, link: &str, link_pose: &Isometry3<f64>| {
        let mut rel = frame.inverse() * link_pose;
        rel.translation.vector = Vec3::zeros();
        inertia(link).transformed(&rel)
    };

    let u = inertia("upper_arm");
    let f = inertia("forearm");
    // Crank about the shoulder and tie rod about the crank tip, both in the
    // axes of the group they co-rotate with.
    let crank = reoriented(&forearm, "crank", &crank_pose);
    let tie = reoriented(&upper, "tie_rod", &tie_pose);
    let tip = forearm.inverse_transform_vector(&(tie_pose.translation.vector - crank_pose.translation.vector));

    // Crank and tie-rod masses ride on the upper arm, which stays close to
    // where they sit physically. Their moments that turn with the forearm
    // pitch (crank COM, tie-rod carried by the crank tip) go to the forearm
    // as a COM shift without mass.
    let m_upper = u.mass + tie.mass + crank.mass;
    let m_fore = f.mass;
    let first_fore = f.com * f.mass + crank.com * crank.mass + tip * tie.mass;
    let first_upper = u.com * u.mass + tie.com * tie.mass;

    let com_of = |first: Vec3, mass: f64| if mass > 0.0 { first / mass } else { Vec3::zeros() };
    let upper_lumped =
        LinkInertia { mass: m_upper, com: com_of(first_upper, m_upper), inertia: u.inertia + tie.inertia };
    // The crank keeps the forearm's orientation, so its own inertia goes there.
    let fore_lumped = LinkInertia { mass: m_fore, com: com_of(first_fore, m_fore), inertia: f.inertia + crank.inertia };

    let src = model.parts();
    let mut parts = ModelParts {
        kind: RobotKind::Cr4Serial,
        links: Vec::new(),
        joints: Vec::new(),
        frames: src.frames.clone(),
        closures: Vec::new(),
        tool_frame: src.tool_frame.clone(),
        reach_origin: src.reach_origin.clone(),
        reference_passive: Vec::new(),
        scale: src.scale,
        scaling_law: src.scaling_law,
    };
    for link in &src.links {
        match link.name.as_str() {
            "crank" | "tie_rod" => {}
            "upper_arm" => parts.links.push(crate::model::Link { name: link.name.clone(), inertia: upper_lumped.clone() }),
            "forearm" => parts.links.push(crate::model::Link { name: link.name.clone(), inertia: fore_lumped.clone() }),
            _ => parts.links.push(link.clone()),
        }
    }
    for joint in &src.joints {
        match joint.name.as_str() {
            "J3" | "tie_rod_pin" => {}
            "elbow" => {
                let mut j = joint.clone();
                j.name = "J3".into();
                j.role = JointRole::Actuated;
                let j3 = &src.joints[model.joint_index("J3").unwrap()];
                j.velocity_limit = j3.velocity_limit;
                j.limits = [j3.limits[0] - joint_limit_span(src, "J2"), j3.limits[1] + joint_limit_span(src, "J2")];
                parts.joints.push(j);
            }
            _ => parts.joints.push(joint.clone()),
        }
    }
    // Only frames on surviving links are kept.
    parts.frames.retain(|fr| parts.links.iter().any(|l| l.name == fr.link));
    Ok(RigidBodyModel::from_parts(parts)?)
}

fn joint_limit_span(parts: &ModelParts, name: &str) -> f64 {
    parts.joints.iter().find(|j| j.name == name).map_or(0.0, |j| j.limits[1] - j.limits[0])
}

/// Serial-surrogate coordinates from CR4 actuated coordinates.
pub fn serial_coordinates(q_a: &DVector<f64>) -> DVector<f64> {
    let mut q = q_a.clone();
    q[2] = q_a[2] - q_a[1];
    q
}

/// Inverse dynamics on a serial model, reported on the actuated joints of the
/// original arm. For the CR4 surrogate the elbow torque is mapped back to the
/// ground-referenced J3 drive.
pub fn demo_inverse_dynamics(
    model_demo: &RigidBodyModel,
    q_a: &DVector<f64>,
    qd_a: &DVector<f64>,
    qdd_a: &DVector<f64>,
    gravity: &Vec3,
) -> Result<DVector<f64>, DynamicsError> {
    if !model_demo.closures().is_empty() || model_demo.n_passive() != 0 {
        return Err(DynamicsError::NotSerial);
    }
    let n = model_demo.n();
    check_len(q_a, n)?;
    check_len(qd_a, n)?;
    check_len(qdd_a, n)?;
    if model_demo.kind() != RobotKind::Cr4Serial {
        return rnea(model_demo, q_a, qd_a, qdd_a, gravity);
    }
    let tau = rnea(
        model_demo,
        &serial_coordinates(q_a),
        &serial_coordinates(qd_a),
        &serial_coordinates(qdd_a),
        gravity,
    )?;
    // Virtual work with q3' = q3 - q2: tau_2 = tau'_2 - tau'_3, tau_3 = tau'_3.
    let mut out = tau.clone();
    out[1] = tau[1] - tau[2];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::kkt::constrained_inverse_dynamics;
    use crate::dynamics::rnea::STANDARD_GRAVITY;
    use crate::kinematics::solve_closure;
    use crate::model::{build_cr4, build_cr6, ScalingLaw};
    use approx::assert_relative_eq;

    #[test]
    fn surrogate_preserves_mass_and_actuated_count() {
        let m = build_cr4(1.6, ScalingLaw::CALIBRATED).unwrap();
        let s = lump_serial_model(&m).unwrap();
        assert_relative_eq!(s.total_mass(), m.total_mass(), epsilon = 1e-12);
        assert_eq!(s.n_actuated(), 4);
        assert_eq!(s.joints().len(), 5);
        assert!(crate::model::validate_model(&s).is_empty(), "{:?}", crate::model::validate_model(&s));
    }

    #[test]
    fn static_torques_match_closed_chain() {
        let m = build_cr4(1.6, ScalingLaw::CALIBRATED).unwrap();
        let s = lump_serial_model(&m).unwrap();
        let z = DVector::zeros(4);
        for qa in [[0.0, 0.0, 0.0, 0.0], [0.4, 0.8, -0.3, 0.2], [-1.0, -0.4, 0.6, -0.5]] {
            let q_a = DVector::from_row_slice(&qa);
            let q = solve_closure(&m, &q_a, None).unwrap();
            let pro = constrained_inverse_dynamics(&m, &q, &z, &z, &STANDARD_GRAVITY).unwrap();
            let demo = demo_inverse_dynamics(&s, &q_a, &z, &z, &STANDARD_GRAVITY).unwrap();
            assert!((&pro.tau_a - &demo).amax() <= 1e-9, "{} vs {}", pro.tau_a, demo);
        }
    }

    #[test]
    fn zero_state_zero_gravity() {
        let s = lump_serial_model(&build_cr4(1.0, ScalingLaw::GEOMETRIC).unwrap()).unwrap();
        let z = DVector::zeros(4);
        let tau = demo_inverse_dynamics(&s, &z, &z, &z, &Vec3::zeros()).unwrap();
        assert!(tau.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn rejects_non_cr4() {
        let m = build_cr6(1.0, ScalingLaw::GEOMETRIC).unwrap();
        assert!(lump_serial_model(&m).is_err());
    }
}
