//! Parametric manipulator models.
//!
//! A [`RigidBodyModel`] is a tree of revolute/fixed joints plus optional loop
//! closures between link-attached frames. Models are values: every operation
//! here returns a new model and leaves its input untouched.

mod cr4;
mod cr6;
mod document;

pub use cr4::{cr4_reference, cr4_reference_passive, Cr4Geometry, CR4_GEOMETRY};
pub use cr6::cr6_reference;
pub use document::{model_from_json, model_to_json, ModelDocument, TransformDoc};

use std::collections::BTreeMap;

use nalgebra::{Isometry3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{point_inertia, rotate_inertia, Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("invalid model structure: {0}")]
    Structure(String),
    #[error("invalid payload: {0:?}")]
    InvalidPayload(Vec<String>),
    #[error("actuator mass for joint {joint} is negative ({mass} kg)")]
    NegativeActuatorMass { joint: String, mass: f64 },
    #[error("expected {expected} actuator masses, got {got}")]
    ActuatorCountMismatch { expected: usize, got: usize },
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("model is not a CR4 parallelogram arm: {0}")]
    NotCr4(String),
    #[error("model document: {0}")]
    Document(String),
}

/// Mass properties of one link, expressed in the link frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkInertia {
    pub mass: f64,
    pub com: Vec3,
    /// Rotational inertia about the COM.
    pub inertia: Mat3,
}

impl LinkInertia {
    pub fn zero() -> Self {
        Self { mass: 0.0, com: Vec3::zeros(), inertia: Mat3::zeros() }
    }

    pub fn point(mass: f64, at: Vec3) -> Self {
        Self { mass, com: at, inertia: Mat3::zeros() }
    }

    /// Solid cylinder of length `length` and radius `radius`, centred at `com`,
    /// with its long axis along `axis` (0 = x, 1 = y, 2 = z).
    pub fn cylinder(mass: f64, length: f64, radius: f64, axis: usize, com: Vec3) -> Self {
        let transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
        let axial = 0.5 * mass * radius * radius;
        let mut diag = Vec3::repeat(transverse);
        diag[axis] = axial;
        Self { mass, com, inertia: Mat3::from_diagonal(&diag) }
    }

    /// Composite of two bodies given in the same frame (parallel-axis rule).
    pub fn combine(&self, other: &LinkInertia) -> LinkInertia {
        let mass = self.mass + other.mass;
        if mass <= 0.0 {
            return LinkInertia { mass, com: self.com, inertia: self.inertia + other.inertia };
        }
        let com = (self.com * self.mass + other.com * other.mass) / mass;
        let inertia = self.inertia
            + point_inertia(self.mass, &(self.com - com))
            + other.inertia
            + point_inertia(other.mass, &(other.com - com));
        LinkInertia { mass, com, inertia }
    }

    /// Re-express in a parent frame where this body's frame sits at `placement`.
    pub fn transformed(&self, placement: &Isometry3<f64>) -> LinkInertia {
        LinkInertia {
            mass: self.mass,
            com: placement.transform_point(&self.com.into()).coords,
            inertia: rotate_inertia(&placement.rotation.to_rotation_matrix(), &self.inertia),
        }
    }

    pub fn violations(&self, label: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            out.push(format!("{label}: mass {} is negative or not finite", self.mass));
        }
        if !self.com.iter().all(|c| c.is_finite()) {
            out.push(format!("{label}: COM is not finite"));
        }
        let asym = (self.inertia - self.inertia.transpose()).amax();
        let scale = self.inertia.amax().max(1.0);
        if asym > 1e-12 * scale {
            out.push(format!("{label}: inertia tensor is not symmetric (asymmetry {asym:e})"));
            return out;
        }
        let eig = SymmetricEigen::new(self.inertia).eigenvalues;
        let tol = 1e-12 * scale;
        if eig.iter().any(|&e| e < -tol) {
            out.push(format!("{label}: negative principal moment in {:?}", eig.as_slice()));
        }
        for i in 0..3 {
            let (a, b, c) = (eig[i], eig[(i + 1) % 3], eig[(i + 2) % 3]);
            if a + b < c - tol {
                out.push(format!("{label}: principal moments violate the triangle inequality"));
                break;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointRole {
    Actuated,
    Passive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    /// Rotation axis in the joint frame.
    pub axis: Vec3,
    pub parent: String,
    pub child: String,
    pub role: JointRole,
    pub limits: [f64; 2],
    pub velocity_limit: f64,
    /// Placement of the joint frame in the parent link frame.
    pub origin: Isometry3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub inertia: LinkInertia,
}

/// A named frame rigidly attached to a link.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSpec {
    pub name: String,
    pub link: String,
    pub placement: Isometry3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dof {
    X,
    Y,
    Z,
    Rx,
    Ry,
    Rz,
}

impl Dof {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_rotational(self) -> bool {
        matches!(self, Dof::Rx | Dof::Ry | Dof::Rz)
    }
}

/// Loop closure: the listed dofs of `frame_b` relative to `frame_a`
/// (expressed in `frame_a`) must vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopClosureSpec {
    pub frame_a: String,
    pub frame_b: String,
    pub dofs: Vec<Dof>,
}

/// Exponents of the geometric-similarity scaling: lengths go as `s`, masses
/// as `s^mass_exponent` and inertias as `s^inertia_exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub mass_exponent: f64,
    pub inertia_exponent: f64,
}

impl ScalingLaw {
    pub const LENGTH_EXPONENT: f64 = 1.0;
    /// Pure geometric similarity.
    pub const GEOMETRIC: ScalingLaw = ScalingLaw { mass_exponent: 3.0, inertia_exponent: 5.0 };
    /// Calibrated exponents used for the industrial palletizing benchmark.
    pub const CALIBRATED: ScalingLaw = ScalingLaw { mass_exponent: 1.7, inertia_exponent: 3.7 };

    pub fn mass_factor(&self, s: f64) -> f64 {
        s.powf(self.mass_exponent)
    }

    pub fn inertia_factor(&self, s: f64) -> f64 {
        s.powf(self.inertia_exponent)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.mass_exponent.is_finite() || !self.inertia_exponent.is_finite() {
            out.push("scaling law: exponents must be finite".to_string());
        } else if self.mass_exponent > self.inertia_exponent {
            out.push(format!(
                "scaling law: mass exponent {} exceeds inertia exponent {}",
                self.mass_exponent, self.inertia_exponent
            ));
        }
        out
    }
}

impl Default for ScalingLaw {
    fn default() -> Self {
        Self::GEOMETRIC
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayloadSpec {
    pub mass: f64,
    /// COM in the tool frame.
    pub com_offset: Vec3,
    /// Rotational inertia about the payload COM, tool-frame axes.
    pub inertia: Mat3,
}

impl PayloadSpec {
    pub fn none() -> Self {
        Self { mass: 0.0, com_offset: Vec3::zeros(), inertia: Mat3::zeros() }
    }

    pub fn with_diagonal(mass: f64, com_offset: Vec3, diag: Vec3) -> Self {
        Self { mass, com_offset, inertia: Mat3::from_diagonal(&diag) }
    }

    fn as_inertia(&self) -> LinkInertia {
        LinkInertia { mass: self.mass, com: self.com_offset, inertia: self.inertia }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    Cr4,
    Cr6,
    /// Serial surrogate of a CR4 used by the fast approximate path.
    Cr4Serial,
    Custom,
}

/// Plain-data description of a model. Build a [`RigidBodyModel`] from it with
/// [`RigidBodyModel::from_parts`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParts {
    pub kind: RobotKind,
    pub links: Vec<Link>,
    /// Joints in topological order.
    pub joints: Vec<JointSpec>,
    pub frames: Vec<FrameSpec>,
    pub closures: Vec<LoopClosureSpec>,
    pub tool_frame: String,
    /// Joint from which the stretched reach to the tool is measured.
    pub reach_origin: String,
    /// Passive coordinates of the reference (all actuated = 0) pose.
    pub reference_passive: Vec<f64>,
    pub scale: f64,
    pub scaling_law: ScalingLaw,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct FrameRef {
    pub link: usize,
    pub placement: Isometry3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Topology {
    pub link_index: BTreeMap<String, usize>,
    pub frames: BTreeMap<String, FrameRef>,
    pub joint_parent: Vec<usize>,
    pub joint_child: Vec<usize>,
    pub link_parent_joint: Vec<Option<usize>>,
    pub root: usize,
    pub joint_coord: Vec<Option<usize>>,
    pub coord_joint: Vec<usize>,
    pub n_a: usize,
    pub n_p: usize,
    /// Joints from the root down to each link.
    pub link_path: Vec<Vec<usize>>,
    /// Links in the subtree carried by each joint (child link included).
    pub joint_subtree: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidBodyModel {
    parts: ModelParts,
    topo: Topology,
}

impl RigidBodyModel {
    /// Assemble a model. Only structural problems (unknown link names, a
    /// non-tree joint graph, joints out of topological order, duplicate
    /// names) are rejected here; everything else is reported by
    /// [`validate_model`].
    pub fn from_parts(parts: ModelParts) -> Result<Self, ModelError> {
        let topo = Topology::build(&parts)?;
        Ok(Self { parts, topo })
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }

    pub fn into_parts(self) -> ModelParts {
        self.parts
    }

    pub fn kind(&self) -> RobotKind {
        self.parts.kind
    }

    pub fn links(&self) -> &[Link] {
        &self.parts.links
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.parts.joints
    }

    pub fn closures(&self) -> &[LoopClosureSpec] {
        &self.parts.closures
    }

    pub fn tool_frame(&self) -> &str {
        &self.parts.tool_frame
    }

    pub fn scale(&self) -> f64 {
        self.parts.scale
    }

    pub fn scaling_law(&self) -> ScalingLaw {
        self.parts.scaling_law
    }

    /// Total number of joint coordinates.
    pub fn n(&self) -> usize {
        self.topo.n_a + self.topo.n_p
    }

    pub fn n_actuated(&self) -> usize {
        self.topo.n_a
    }

    pub fn n_passive(&self) -> usize {
        self.topo.n_p
    }

    /// Number of scalar closure constraints.
    pub fn n_constraints(&self) -> usize {
        self.parts.closures.iter().map(|c| c.dofs.len()).sum()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.topo.link_index.get(name).copied()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.parts.joints.iter().position(|j| j.name == name)
    }

    /// Coordinate index of a joint, `None` for fixed joints.
    pub fn joint_coordinate(&self, joint: usize) -> Option<usize> {
        self.topo.joint_coord[joint]
    }

    /// Joint owning each coordinate.
    pub fn coordinate_joint(&self, coord: usize) -> &JointSpec {
        &self.parts.joints[self.topo.coord_joint[coord]]
    }

    /// Actuated joints in coordinate order.
    pub fn actuated_joints(&self) -> impl Iterator<Item = &JointSpec> {
        self.topo.coord_joint[..self.topo.n_a].iter().map(|&j| &self.parts.joints[j])
    }

    pub fn has_frame(&self, name: &str) -> bool {
        self.topo.frames.contains_key(name)
    }

    pub(crate) fn topo(&self) -> &Topology {
        &self.topo
    }

    pub(crate) fn frame(&self, name: &str) -> Result<&FrameRef, ModelError> {
        self.topo.frames.get(name).ok_or_else(|| ModelError::UnknownFrame(name.to_string()))
    }

    pub fn total_mass(&self) -> f64 {
        self.parts.links.iter().map(|l| l.inertia.mass).sum()
    }

    fn with_parts(&self, parts: ModelParts) -> Self {
        // Link/joint structure is unchanged by the value transforms below.
        let topo = Topology::build(&parts).expect("structure preserved");
        Self { parts, topo }
    }
}

impl Topology {
    fn build(parts: &ModelParts) -> Result<Self, ModelError> {
        let structure = |msg: String| ModelError::Structure(msg);
        let mut link_index = BTreeMap::new();
        for (i, link) in parts.links.iter().enumerate() {
            if link_index.insert(link.name.clone(), i).is_some() {
                return Err(structure(format!("duplicate link `{}`", link.name)));
            }
        }
        let nl = parts.links.len();
        let mut link_parent_joint: Vec<Option<usize>> = vec![None; nl];
        let mut joint_parent = Vec::with_capacity(parts.joints.len());
        let mut joint_child = Vec::with_capacity(parts.joints.len());
        let mut placed = vec![false; nl];
        let mut names = std::collections::BTreeSet::new();

        // The root is the unique link that is never a child.
        let children: std::collections::BTreeSet<&str> =
            parts.joints.iter().map(|j| j.child.as_str()).collect();
        let roots: Vec<usize> =
            (0..nl).filter(|&i| !children.contains(parts.links[i].name.as_str())).collect();
        if roots.len() != 1 {
            return Err(structure(format!("expected exactly one root link, found {}", roots.len())));
        }
        let root = roots[0];
        placed[root] = true;

        for (j, joint) in parts.joints.iter().enumerate() {
            if !names.insert(joint.name.clone()) {
                return Err(structure(format!("duplicate joint `{}`", joint.name)));
            }
            let p = *link_index
                .get(&joint.parent)
                .ok_or_else(|| structure(format!("joint `{}`: unknown parent `{}`", joint.name, joint.parent)))?;
            let c = *link_index
                .get(&joint.child)
                .ok_or_else(|| structure(format!("joint `{}`: unknown child `{}`", joint.name, joint.child)))?;
            if !placed[p] {
                return Err(structure(format!("joint `{}` is not in topological order", joint.name)));
            }
            if link_parent_joint[c].is_some() || c == root {
                return Err(structure(format!("link `{}` has more than one parent", joint.child)));
            }
            link_parent_joint[c] = Some(j);
            placed[c] = true;
            joint_parent.push(p);
            joint_child.push(c);
        }
        if let Some(i) = placed.iter().position(|p| !p) {
            return Err(structure(format!("link `{}` is not connected", parts.links[i].name)));
        }

        let mut joint_coord = vec![None; parts.joints.len()];
        let mut coord_joint = Vec::new();
        for role in [JointRole::Actuated, JointRole::Passive] {
            for (j, joint) in parts.joints.iter().enumerate() {
                if joint.kind == JointKind::Revolute && joint.role == role {
                    joint_coord[j] = Some(coord_joint.len());
                    coord_joint.push(j);
                }
            }
        }
        let n_a = parts
            .joints
            .iter()
            .filter(|j| j.kind == JointKind::Revolute && j.role == JointRole::Actuated)
            .count();
        let n_p = coord_joint.len() - n_a;

        let mut link_path = vec![Vec::new(); nl];
        for (j, &c) in joint_child.iter().enumerate() {
            let mut path = link_path[joint_parent[j]].clone();
            path.push(j);
            link_path[c] = path;
        }
        let mut joint_subtree = vec![Vec::new(); parts.joints.len()];
        for (link, path) in link_path.iter().enumerate() {
            for &j in path {
                joint_subtree[j].push(link);
            }
        }

        let mut frames = BTreeMap::new();
        for (name, &i) in &link_index {
            frames.insert(name.clone(), FrameRef { link: i, placement: Isometry3::identity() });
        }
        for f in &parts.frames {
            let link = *link_index
                .get(&f.link)
                .ok_or_else(|| structure(format!("frame `{}`: unknown link `{}`", f.name, f.link)))?;
            if frames.insert(f.name.clone(), FrameRef { link, placement: f.placement }).is_some() {
                return Err(structure(format!("duplicate frame name `{}`", f.name)));
            }
        }

        Ok(Self {
            link_index,
            frames,
            joint_parent,
            joint_child,
            link_parent_joint,
            root,
            joint_coord,
            coord_joint,
            n_a,
            n_p,
            link_path,
            joint_subtree,
        })
    }
}

/// Build the CR4 palletizer (parallelogram elbow drive) at the given scale.
pub fn build_cr4(scale: f64, law: ScalingLaw) -> Result<RigidBodyModel, ModelError> {
    apply_scaling(&cr4_reference(), scale, law)
}

/// Build the serial six-axis arm at the given scale.
pub fn build_cr6(scale: f64, law: ScalingLaw) -> Result<RigidBodyModel, ModelError> {
    apply_scaling(&cr6_reference(), scale, law)
}

/// Lengths ×s, masses ×s^α, inertias ×s^β. Axes, limits and orientations
/// are untouched.
pub fn apply_scaling(model: &RigidBodyModel, s: f64, law: ScalingLaw) -> Result<RigidBodyModel, ModelError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(ModelError::NonPositiveScale(s));
    }
    let mass_factor = law.mass_factor(s);
    let inertia_factor = law.inertia_factor(s);
    let mut parts = model.parts.clone();
    for link in &mut parts.links {
        link.inertia.mass *= mass_factor;
        link.inertia.com *= s;
        link.inertia.inertia *= inertia_factor;
    }
    for joint in &mut parts.joints {
        joint.origin.translation.vector *= s;
    }
    for frame in &mut parts.frames {
        frame.placement.translation.vector *= s;
    }
    parts.scale *= s;
    parts.scaling_law = law;
    Ok(model.with_parts(parts))
}

/// Fully stretched reach from the reach-origin joint to the tool frame.
pub fn reach(model: &RigidBodyModel) -> Result<f64, ModelError> {
    let tool = model.frame(model.tool_frame())?;
    let path = &model.topo.link_path[tool.link];
    let start = model
        .joint_index(&model.parts.reach_origin)
        .and_then(|j| path.iter().position(|&p| p == j))
        .ok_or_else(|| ModelError::Structure("reach origin is not on the tool path".into()))?;
    let along: f64 = path[start + 1..]
        .iter()
        .map(|&j| model.parts.joints[j].origin.translation.vector.norm())
        .sum();
    Ok(along + tool.placement.translation.vector.norm())
}

fn add_to_link(parts: &mut ModelParts, link: usize, extra: &LinkInertia) {
    let merged = parts.links[link].inertia.combine(extra);
    parts.links[link].inertia = merged;
}

/// Merge a payload into the link carrying the tool frame.
pub fn attach_payload(model: &RigidBodyModel, payload: &PayloadSpec) -> Result<RigidBodyModel, ModelError> {
    let problems = payload.as_inertia().violations("payload");
    if !problems.is_empty() {
        return Err(ModelError::InvalidPayload(problems));
    }
    if payload.mass == 0.0 && payload.inertia == Mat3::zeros() {
        return Ok(model.clone());
    }
    let tool = model.frame(model.tool_frame())?.clone();
    let mut parts = model.parts.clone();
    add_to_link(&mut parts, tool.link, &payload.as_inertia().transformed(&tool.placement));
    Ok(model.with_parts(parts))
}

/// Add each actuator's mass as a point mass at its joint origin, carried by
/// the joint's parent link. One mass per actuated joint, coordinate order.
pub fn attach_actuator_masses(model: &RigidBodyModel, masses: &[f64]) -> Result<RigidBodyModel, ModelError> {
    if masses.len() != model.n_actuated() {
        return Err(ModelError::ActuatorCountMismatch { expected: model.n_actuated(), got: masses.len() });
    }
    let mut parts = model.parts.clone();
    for (coord, &mass) in masses.iter().enumerate() {
        let j = model.topo.coord_joint[coord];
        let joint = &model.parts.joints[j];
        if !(mass >= 0.0) {
            return Err(ModelError::NegativeActuatorMass { joint: joint.name.clone(), mass });
        }
        if mass == 0.0 {
            continue;
        }
        let point = LinkInertia::point(mass, joint.origin.translation.vector);
        add_to_link(&mut parts, model.topo.joint_parent[j], &point);
    }
    Ok(model.with_parts(parts))
}

/// Check every model invariant. Empty result means the model is valid.
pub fn validate_model(model: &RigidBodyModel) -> Vec<String> {
    let parts = &model.parts;
    let mut out = Vec::new();
    if !(parts.scale > 0.0) {
        out.push(format!("scale {} is not positive", parts.scale));
    }
    out.extend(parts.scaling_law.violations());
    for link in &parts.links {
        out.extend(link.inertia.violations(&format!("link `{}`", link.name)));
    }
    for joint in &parts.joints {
        let label = format!("joint `{}`", joint.name);
        if joint.kind == JointKind::Revolute && (joint.axis.norm() - 1.0).abs() > 1e-12 {
            out.push(format!("{label}: axis norm {} is not 1", joint.axis.norm()));
        }
        if !(joint.limits[0] <= joint.limits[1]) {
            out.push(format!("{label}: lower limit exceeds upper limit"));
        }
        if !(joint.velocity_limit > 0.0) {
            out.push(format!("{label}: velocity limit must be positive"));
        }
        if joint.kind == JointKind::Fixed && joint.role == JointRole::Actuated {
            out.push(format!("{label}: fixed joints cannot be actuated"));
        }
    }
    if !model.has_frame(&parts.tool_frame) {
        out.push(format!("tool frame `{}` does not exist", parts.tool_frame));
    }
    for (i, closure) in parts.closures.iter().enumerate() {
        let label = format!("closure {i}");
        for name in [&closure.frame_a, &closure.frame_b] {
            if !model.has_frame(name) {
                out.push(format!("{label}: frame `{name}` does not exist"));
            }
        }
        if closure.frame_a == closure.frame_b {
            out.push(format!("{label}: frame_a and frame_b are the same"));
        }
        if closure.dofs.is_empty() {
            out.push(format!("{label}: no constrained dofs"));
        }
        let mut dofs = closure.dofs.clone();
        dofs.sort();
        dofs.dedup();
        if dofs.len() != closure.dofs.len() {
            out.push(format!("{label}: duplicate constrained dofs"));
        }
    }
    if model.n_constraints() != model.n_passive() {
        out.push(format!(
            "closure: {} constrained dofs for {} passive joints (closure must be square)",
            model.n_constraints(),
            model.n_passive()
        ));
    }
    if parts.reference_passive.len() != model.n_passive() {
        out.push("reference passive solution has the wrong length".to_string());
    }
    out
}
