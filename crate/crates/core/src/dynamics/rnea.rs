//! Open-tree rigid-body dynamics in world-aligned coordinates.

use nalgebra::{DMatrix, DVector};

use super::DynamicsError;
use crate::kinematics::{check_len, KinematicState};
use crate::math::{point_inertia, rotate_inertia, Mat3, Vec3};
use crate::model::RigidBodyModel;

pub const STANDARD_GRAVITY: Vec3 = Vec3::new(0.0, 0.0, -9.81);

struct LinkWorld {
    mass: f64,
    com: Vec3,
    inertia: Mat3,
}

fn world_inertias(model: &RigidBodyModel, state: &KinematicState) -> Vec<LinkWorld> {
    model
        .links()
        .iter()
        .zip(&state.links)
        .map(|(link, pose)| {
            let rot = pose.rotation.to_rotation_matrix();
            LinkWorld {
                mass: link.inertia.mass,
                com: pose.transform_point(&link.inertia.com.into()).coords,
                inertia: rotate_inertia(&rot, &link.inertia.inertia),
            }
        })
        .collect()
}

/// Recursive Newton–Euler: generalized forces for the open tree (closures
/// are ignored).
pub fn rnea(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    gravity: &Vec3,
) -> Result<DVector<f64>, DynamicsError> {
    let n = model.n();
    check_len(qd, n)?;
    check_len(qdd, n)?;
    let state = KinematicState::compute(model, q)?;
    let topo = model.topo();
    let bodies = world_inertias(model, &state);
    let nl = bodies.len();

    let mut omega = vec![Vec3::zeros(); nl];
    let mut omega_dot = vec![Vec3::zeros(); nl];
    // Link-origin acceleration; gravity enters as a base acceleration.
    let mut acc = vec![Vec3::zeros(); nl];
    acc[topo.root] = -gravity;
    let origin = |l: usize| state.links[l].translation.vector;

    for (j, _) in model.joints().iter().enumerate() {
        let (p, c) = (topo.joint_parent[j], topo.joint_child[j]);
        let (rate, accel) = topo.joint_coord[j].map_or((0.0, 0.0), |k| (qd[k], qdd[k]));
        let z = state.axes[j];
        let r = origin(c) - origin(p);
        omega[c] = omega[p] + z * rate;
        omega_dot[c] = omega_dot[p] + z * accel + omega[p].cross(&(z * rate));
        acc[c] = acc[p] + omega_dot[p].cross(&r) + omega[p].cross(&omega[p].cross(&r));
    }

    let mut force = vec![Vec3::zeros(); nl];
    let mut moment = vec![Vec3::zeros(); nl];
    for l in 0..nl {
        let b = &bodies[l];
        let rc = b.com - origin(l);
        let a_com = acc[l] + omega_dot[l].cross(&rc) + omega[l].cross(&omega[l].cross(&rc));
        let f = a_com * b.mass;
        let n_com = b.inertia * omega_dot[l] + omega[l].cross(&(b.inertia * omega[l]));
        force[l] = f;
        moment[l] = n_com + rc.cross(&f);
    }

    let mut tau = DVector::zeros(n);
    for j in (0..model.joints().len()).rev() {
        let (p, c) = (topo.joint_parent[j], topo.joint_child[j]);
        if let Some(k) = topo.joint_coord[j] {
            tau[k] = state.axes[j].dot(&moment[c]);
        }
        let (fc, nc) = (force[c], moment[c]);
        force[p] += fc;
        moment[p] += nc + (origin(c) - origin(p)).cross(&fc);
    }
    Ok(tau)
}

/// Joint-space mass matrix by composite rigid bodies.
pub fn mass_matrix(model: &RigidBodyModel, q: &DVector<f64>) -> Result<DMatrix<f64>, DynamicsError> {
    let state = KinematicState::compute(model, q)?;
    let topo = model.topo();
    let bodies = world_inertias(model, &state);
    let n = model.n();
    let mut m = DMatrix::zeros(n, n);

    for (j, _) in model.joints().iter().enumerate() {
        let Some(cj) = topo.joint_coord[j] else { continue };
        // Composite of the subtree carried by joint j.
        let (mut mass, mut first, mut inertia_o) = (0.0, Vec3::zeros(), Mat3::zeros());
        for &l in &topo.joint_subtree[j] {
            let b = &bodies[l];
            mass += b.mass;
            first += b.com * b.mass;
            inertia_o += b.inertia + point_inertia(b.mass, &b.com);
        }
        let z = state.axes[j];
        let p = state.anchors[j];
        let com = if mass > 0.0 { first / mass } else { Vec3::zeros() };
        let inertia_c = inertia_o - point_inertia(mass, &com);
        let inertia_p = inertia_c + point_inertia(mass, &(com - p));
        let f = z.cross(&(com - p)) * mass;
        let n_p = inertia_p * z;

        let child = topo.joint_child[j];
        for &k in &topo.link_path[child] {
            let Some(ck) = topo.joint_coord[k] else { continue };
            let n_k = n_p + (p - state.anchors[k]).cross(&f);
            let value = state.axes[k].dot(&n_k);
            m[(ck, cj)] = value;
            m[(cj, ck)] = value;
        }
    }
    Ok(m)
}

/// Mass matrix assembled column by column from RNEA with gravity off.
pub fn mass_matrix_by_rnea(model: &RigidBodyModel, q: &DVector<f64>) -> Result<DMatrix<f64>, DynamicsError> {
    let n = model.n();
    let zero = DVector::zeros(n);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        m.set_column(i, &rnea(model, q, &zero, &e, &Vec3::zeros())?);
    }
    Ok(m)
}

/// Mass matrix, bias forces and gravity-only forces at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsTerms {
    pub mass: DMatrix<f64>,
    /// Coriolis, centrifugal and gravity forces.
    pub bias: DVector<f64>,
    pub gravity: DVector<f64>,
}

pub fn dynamics_terms(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    gravity: &Vec3,
) -> Result<DynamicsTerms, DynamicsError> {
    let zero = DVector::zeros(model.n());
    Ok(DynamicsTerms {
        mass: mass_matrix(model, q)?,
        bias: rnea(model, q, qd, &zero, gravity)?,
        gravity: rnea(model, q, &zero, &zero, gravity)?,
    })
}

pub fn potential_energy(model: &RigidBodyModel, q: &DVector<f64>, gravity: &Vec3) -> Result<f64, DynamicsError> {
    let state = KinematicState::compute(model, q)?;
    Ok(world_inertias(model, &state).iter().map(|b| -b.mass * gravity.dot(&b.com)).sum())
}

pub fn kinetic_energy(model: &RigidBodyModel, q: &DVector<f64>, qd: &DVector<f64>) -> Result<f64, DynamicsError> {
    check_len(qd, model.n())?;
    let m = mass_matrix(model, q)?;
    Ok(0.5 * qd.dot(&(m * qd)))
}
