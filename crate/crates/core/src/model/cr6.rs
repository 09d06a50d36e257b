use std::f64::consts::PI;

use nalgebra::Isometry3;

use super::{JointKind, JointRole, JointSpec, Link, LinkInertia, ModelParts, RigidBodyModel, RobotKind, ScalingLaw};
use crate::math::Vec3;

// (name, parent, child, origin offset, axis, limit, velocity limit)
type JointRow = (&'static str, &'static str, &'static str, [f64; 3], Vec3, f64, f64);

/// Unit-scale serial six-axis arm: yaw, shoulder, elbow, then a
/// roll-pitch-roll wrist. Zero pose is stretched along +x.
pub fn cr6_reference() -> RigidBodyModel {
    let r = 0.04;
    let links = vec![
        Link { name: "base".into(), inertia: LinkInertia::cylinder(30.0, 0.1, 0.2, 2, Vec3::new(0.0, 0.0, 0.05)) },
        Link { name: "link1".into(), inertia: LinkInertia::cylinder(18.0, 0.4, 0.1, 2, Vec3::new(0.0, 0.0, 0.2)) },
        Link { name: "link2".into(), inertia: LinkInertia::cylinder(10.0, 0.45, r, 0, Vec3::new(0.225, 0.0, 0.0)) },
        Link { name: "link3".into(), inertia: LinkInertia::cylinder(4.0, 0.1, r, 0, Vec3::new(0.05, 0.0, 0.0)) },
        Link { name: "link4".into(), inertia: LinkInertia::cylinder(4.0, 0.3, 0.035, 0, Vec3::new(0.15, 0.0, 0.0)) },
        Link { name: "link5".into(), inertia: LinkInertia::cylinder(1.5, 0.08, 0.03, 0, Vec3::new(0.04, 0.0, 0.0)) },
        Link { name: "link6".into(), inertia: LinkInertia::cylinder(0.5, 0.02, 0.04, 0, Vec3::new(0.01, 0.0, 0.0)) },
    ];
    let pitch = -Vec3::y();
    let rows: [JointRow; 6] = [
        ("J1", "base", "link1", [0.0, 0.0, 0.0], Vec3::z(), 3.1, 2.5),
        ("J2", "link1", "link2", [0.0, 0.0, 0.4], pitch, 1.8, 2.5),
        ("J3", "link2", "link3", [0.45, 0.0, 0.0], pitch, 2.5, 3.0),
        ("J4", "link3", "link4", [0.1, 0.0, 0.0], Vec3::x(), PI, 4.0),
        ("J5", "link4", "link5", [0.3, 0.0, 0.0], pitch, 2.0, 4.0),
        ("J6", "link5", "link6", [0.08, 0.0, 0.0], Vec3::x(), PI, 5.0),
    ];
    let joints = rows
        .iter()
        .map(|&(name, parent, child, o, axis, limit, vmax)| JointSpec {
            name: name.into(),
            kind: JointKind::Revolute,
            axis,
            parent: parent.into(),
            child: child.into(),
            role: JointRole::Actuated,
            limits: [-limit, limit],
            velocity_limit: vmax,
            origin: Isometry3::translation(o[0], o[1], o[2]),
        })
        .collect();

    RigidBodyModel::from_parts(ModelParts {
        kind: RobotKind::Cr6,
        links,
        joints,
        frames: Vec::new(),
        closures: Vec::new(),
        tool_frame: "link6".into(),
        reach_origin: "J2".into(),
        reference_passive: Vec::new(),
        scale: 1.0,
        scaling_law: ScalingLaw::GEOMETRIC,
    })
    .expect("CR6 reference structure")
}
