//! Unit-scale CR4 palletizer.
//!
//! Kinematic layout (arm plane after the base yaw, x forward, z up):
//!
//! ```text
//!            crank tip C ---------- tie rod ---------- F (forearm lever)
//!              |                                       |
//!   shoulder S +========== upper arm =========== E elbow +==== forearm ==== W wrist/tool
//!              |
//!            column
//! ```
//!
//! J2 drives the upper arm and J3 drives the crank, both about the shoulder
//! axis. The crank, tie rod, lever and upper arm form a parallelogram, so the
//! forearm's absolute pitch equals the J3 angle. The elbow and tie-rod joints
//! are passive and the tie-rod tip is closed onto the lever in the two planar
//! translation dofs.
//!
//! Masses are stand-ins: slender uniform rods except the turret column.

use std::f64::consts::PI;

use nalgebra::{Isometry3, UnitQuaternion};

use super::{
    Dof, FrameSpec, JointKind, JointRole, JointSpec, Link, LinkInertia, LoopClosureSpec, ModelParts, RigidBodyModel,
    RobotKind, ScalingLaw,
};
use crate::math::{isometry, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cr4Geometry {
    pub base_column: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    /// Crank and forearm lever length.
    pub crank: f64,
    pub rod_radius: f64,
    pub turret_mass: f64,
    pub upper_arm_mass: f64,
    pub forearm_mass: f64,
    pub crank_mass: f64,
    pub tie_rod_mass: f64,
    pub wrist_mass: f64,
    pub flange_mass: f64,
}

pub const CR4_GEOMETRY: Cr4Geometry = Cr4Geometry {
    base_column: 0.35,
    upper_arm: 0.47,
    forearm: 0.475,
    crank: 0.12,
    rod_radius: 0.04,
    turret_mass: 25.0,
    upper_arm_mass: 12.0,
    forearm_mass: 8.0,
    crank_mass: 3.0,
    tie_rod_mass: 4.0,
    wrist_mass: 2.0,
    flange_mass: 1.0,
};

/// Passive coordinates (elbow, tie rod) for the given shoulder and crank angles.
pub fn cr4_reference_passive(q2: f64, q3: f64) -> [f64; 2] {
    [q3 - q2, q2 - q3]
}

fn translation(x: f64, y: f64, z: f64) -> Isometry3<f64> {
    Isometry3::translation(x, y, z)
}

#[allow(clippy::too_many_arguments)]
fn revolute(
    name: &str,
    parent: &str,
    child: &str,
    origin: Isometry3<f64>,
    axis: Vec3,
    role: JointRole,
    limits: [f64; 2],
    velocity_limit: f64,
) -> JointSpec {
    JointSpec {
        name: name.into(),
        kind: JointKind::Revolute,
        axis,
        parent: parent.into(),
        child: child.into(),
        role,
        limits,
        velocity_limit,
        origin,
    }
}

pub fn cr4_reference() -> RigidBodyModel {
    let g = CR4_GEOMETRY;
    let pitch = -Vec3::y();
    let r = g.rod_radius;

    let links = vec![
        Link { name: "base".into(), inertia: LinkInertia::cylinder(40.0, 0.1, 0.2, 2, Vec3::new(0.0, 0.0, 0.05)) },
        Link {
            name: "turret".into(),
            inertia: LinkInertia::cylinder(
                g.turret_mass,
                g.base_column,
                0.12,
                2,
                Vec3::new(0.0, 0.0, 0.5 * g.base_column),
            ),
        },
        Link {
            name: "upper_arm".into(),
            inertia: LinkInertia::cylinder(g.upper_arm_mass, g.upper_arm, r, 0, Vec3::new(0.5 * g.upper_arm, 0.0, 0.0)),
        },
        Link {
            name: "crank".into(),
            inertia: LinkInertia::cylinder(g.crank_mass, g.crank, r, 2, Vec3::new(0.0, 0.0, 0.5 * g.crank)),
        },
        Link {
            name: "forearm".into(),
            inertia: LinkInertia::cylinder(g.forearm_mass, g.forearm, r, 0, Vec3::new(0.5 * g.forearm, 0.0, 0.0)),
        },
        Link {
            name: "tie_rod".into(),
            inertia: LinkInertia::cylinder(g.tie_rod_mass, g.upper_arm, 0.5 * r, 0, Vec3::new(0.5 * g.upper_arm, 0.0, 0.0)),
        },
        Link {
            name: "wrist".into(),
            inertia: LinkInertia::cylinder(g.wrist_mass, 0.1, 0.05, 2, Vec3::new(0.0, 0.0, -0.05)),
        },
        Link {
            name: "flange".into(),
            inertia: LinkInertia::cylinder(g.flange_mass, 0.03, 0.08, 2, Vec3::new(0.0, 0.0, -0.03)),
        },
    ];

    let shoulder = translation(0.0, 0.0, g.base_column);
    let joints = vec![
        revolute("J1", "base", "turret", Isometry3::identity(), Vec3::z(), JointRole::Actuated, [-3.2, 3.2], 2.5),
        revolute("J2", "turret", "upper_arm", shoulder, pitch, JointRole::Actuated, [-0.7, 1.4], 2.5),
        revolute("J3", "turret", "crank", shoulder, pitch, JointRole::Actuated, [-1.3, 0.9], 2.5),
        revolute(
            "elbow",
            "upper_arm",
            "forearm",
            translation(g.upper_arm, 0.0, 0.0),
            pitch,
            JointRole::Passive,
            [-3.0, 3.0],
            10.0,
        ),
        revolute(
            "tie_rod_pin",
            "crank",
            "tie_rod",
            translation(0.0, 0.0, g.crank),
            pitch,
            JointRole::Passive,
            [-3.0, 3.0],
            10.0,
        ),
        JointSpec {
            name: "wrist_mount".into(),
            kind: JointKind::Fixed,
            axis: Vec3::z(),
            parent: "forearm".into(),
            child: "wrist".into(),
            role: JointRole::Passive,
            limits: [0.0, 0.0],
            velocity_limit: 1.0,
            origin: translation(g.forearm, 0.0, 0.0),
        },
        revolute("J4", "wrist", "flange", Isometry3::identity(), Vec3::z(), JointRole::Actuated, [-PI, PI], 3.5),
    ];

    let frames = vec![
        FrameSpec {
            name: "tool".into(),
            link: "flange".into(),
            placement: isometry(Vec3::zeros(), UnitQuaternion::from_axis_angle(&Vec3::x_axis(), PI)),
        },
        FrameSpec { name: "tie_rod_tip".into(), link: "tie_rod".into(), placement: translation(g.upper_arm, 0.0, 0.0) },
        FrameSpec { name: "forearm_lever".into(), link: "forearm".into(), placement: translation(0.0, 0.0, g.crank) },
    ];

    let closures = vec![LoopClosureSpec {
        frame_a: "tie_rod_tip".into(),
        frame_b: "forearm_lever".into(),
        dofs: vec![Dof::X, Dof::Z],
    }];

    RigidBodyModel::from_parts(ModelParts {
        kind: RobotKind::Cr4,
        links,
        joints,
        frames,
        closures,
        tool_frame: "tool".into(),
        reach_origin: "J2".into(),
        reference_passive: cr4_reference_passive(0.0, 0.0).to_vec(),
        scale: 1.0,
        scaling_law: ScalingLaw::GEOMETRIC,
    })
    .expect("CR4 reference structure")
}
