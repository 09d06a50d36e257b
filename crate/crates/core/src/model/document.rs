//! JSON document form of a model. Transforms are stored as a translation
//! plus a unit quaternion in (w, x, y, z) order; all values SI.

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{
    Dof, FrameSpec, JointKind, JointRole, JointSpec, Link, LinkInertia, LoopClosureSpec, ModelError, ModelParts,
    RigidBodyModel, RobotKind, ScalingLaw,
};
use crate::math::{Mat3, Vec3};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformDoc {
    pub translation: [f64; 3],
    /// (w, x, y, z)
    pub rotation: [f64; 4],
}

impl From<&Isometry3<f64>> for TransformDoc {
    fn from(iso: &Isometry3<f64>) -> Self {
        let t = iso.translation.vector;
        let q = iso.rotation.quaternion();
        Self { translation: [t.x, t.y, t.z], rotation: [q.w, q.i, q.j, q.k] }
    }
}

impl TransformDoc {
    pub fn to_isometry(&self) -> Result<Isometry3<f64>, ModelError> {
        let [w, x, y, z] = self.rotation;
        let q = Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > 1e-9 {
            return Err(ModelError::Document(format!("quaternion {:?} is not unit", self.rotation)));
        }
        Ok(Isometry3::from_parts(
            Translation3::new(self.translation[0], self.translation[1], self.translation[2]),
            UnitQuaternion::new_unchecked(q),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkDoc {
    pub name: String,
    pub mass: f64,
    pub com: [f64; 3],
    /// Row-major 3×3 about the COM.
    pub inertia: [[f64; 3]; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDoc {
    pub name: String,
    pub kind: JointKind,
    pub role: JointRole,
    pub axis: [f64; 3],
    pub parent: String,
    pub child: String,
    pub limits: [f64; 2],
    pub velocity_limit: f64,
    pub origin: TransformDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub name: String,
    pub link: String,
    pub placement: TransformDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureDoc {
    pub frame_a: String,
    pub frame_b: String,
    pub constrained_dofs: Vec<Dof>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaDoc {
    pub version: u32,
    pub kind: RobotKind,
    pub scale: f64,
    pub scaling_law: ScalingLaw,
    pub reach_origin: String,
    pub reference_passive: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub meta: MetaDoc,
    pub links: Vec<LinkDoc>,
    pub joints: Vec<JointDoc>,
    #[serde(default)]
    pub frames: Vec<FrameDoc>,
    #[serde(default)]
    pub closures: Vec<ClosureDoc>,
    pub tool_frame: String,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl From<&RigidBodyModel> for ModelDocument {
    fn from(model: &RigidBodyModel) -> Self {
        let p = model.parts();
        Self {
            meta: MetaDoc {
                version: MODEL_FORMAT_VERSION,
                kind: p.kind,
                scale: p.scale,
                scaling_law: p.scaling_law,
                reach_origin: p.reach_origin.clone(),
                reference_passive: p.reference_passive.clone(),
            },
            links: p
                .links
                .iter()
                .map(|l| {
                    let i = &l.inertia.inertia;
                    LinkDoc {
                        name: l.name.clone(),
                        mass: l.inertia.mass,
                        com: arr(&l.inertia.com),
                        inertia: [
                            [i[(0, 0)], i[(0, 1)], i[(0, 2)]],
                            [i[(1, 0)], i[(1, 1)], i[(1, 2)]],
                            [i[(2, 0)], i[(2, 1)], i[(2, 2)]],
                        ],
                    }
                })
                .collect(),
            joints: p
                .joints
                .iter()
                .map(|j| JointDoc {
                    name: j.name.clone(),
                    kind: j.kind,
                    role: j.role,
                    axis: arr(&j.axis),
                    parent: j.parent.clone(),
                    child: j.child.clone(),
                    limits: j.limits,
                    velocity_limit: j.velocity_limit,
                    origin: (&j.origin).into(),
                })
                .collect(),
            frames: p
                .frames
                .iter()
                .map(|f| FrameDoc { name: f.name.clone(), link: f.link.clone(), placement: (&f.placement).into() })
                .collect(),
            closures: p
                .closures
                .iter()
                .map(|c| ClosureDoc {
                    frame_a: c.frame_a.clone(),
                    frame_b: c.frame_b.clone(),
                    constrained_dofs: c.dofs.clone(),
                })
                .collect(),
            tool_frame: p.tool_frame.clone(),
        }
    }
}

impl ModelDocument {
    pub fn to_model(&self) -> Result<RigidBodyModel, ModelError> {
        if self.meta.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Document(format!("unsupported model version {}", self.meta.version)));
        }
        let links = self
            .links
            .iter()
            .map(|l| Link {
                name: l.name.clone(),
                inertia: LinkInertia {
                    mass: l.mass,
                    com: Vec3::from(l.com),
                    inertia: Mat3::from_fn(|r, c| l.inertia[r][c]),
                },
            })
            .collect();
        let joints = self
            .joints
            .iter()
            .map(|j| {
                Ok(JointSpec {
                    name: j.name.clone(),
                    kind: j.kind,
                    axis: Vec3::from(j.axis),
                    parent: j.parent.clone(),
                    child: j.child.clone(),
                    role: j.role,
                    limits: j.limits,
                    velocity_limit: j.velocity_limit,
                    origin: j.origin.to_isometry()?,
                })
            })
            .collect::<Result<_, ModelError>>()?;
        let frames = self
            .frames
            .iter()
            .map(|f| Ok(FrameSpec { name: f.name.clone(), link: f.link.clone(), placement: f.placement.to_isometry()? }))
            .collect::<Result<_, ModelError>>()?;
        let closures = self
            .closures
            .iter()
            .map(|c| LoopClosureSpec { frame_a: c.frame_a.clone(), frame_b: c.frame_b.clone(), dofs: c.constrained_dofs.clone() })
            .collect();
        RigidBodyModel::from_parts(ModelParts {
            kind: self.meta.kind,
            links,
            joints,
            frames,
            closures,
            tool_frame: self.tool_frame.clone(),
            reach_origin: self.meta.reach_origin.clone(),
            reference_passive: self.meta.reference_passive.clone(),
            scale: self.meta.scale,
            scaling_law: self.meta.scaling_law,
        })
    }
}

pub fn model_to_json(model: &RigidBodyModel) -> String {
    serde_json::to_string_pretty(&ModelDocument::from(model)).expect("model document serializes")
}

pub fn model_from_json(text: &str) -> Result<RigidBodyModel, ModelError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))?;
    doc.to_model()
}
