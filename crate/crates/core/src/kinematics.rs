//! Forward kinematics, Jacobians, loop-closure solving and damped
//! least-squares IK.
//!
//! Coordinates are ordered actuated-then-passive (see
//! [`RigidBodyModel::joint_coordinate`]). Jacobians are world-aligned with
//! linear rows first.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix6xX, UnitQuaternion};
use thiserror::Error;

use crate::math::{condition_number, inf_norm, so3_log, so3_right_jacobian_inv, axis_rotation, skew, Vec3};
use crate::model::{JointKind, ModelError, RigidBodyModel, RobotKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("expected a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("model has no loop closures")]
    NoClosures,
    #[error("closure is not square: {constraints} constraints for {passive} passive coordinates")]
    NonSquareClosure { constraints: usize, passive: usize },
    #[error("closure Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("passive closure Jacobian is singular (condition {condition:e})")]
    Singular { condition: f64 },
    #[error("IK did not converge (remaining error {error:e})")]
    IkNotConverged { error: f64 },
}

pub(crate) fn check_len(v: &DVector<f64>, expected: usize) -> Result<(), KinematicsError> {
    if v.len() != expected {
        Err(KinematicsError::Dimension { expected, got: v.len() })
    } else {
        Ok(())
    }
}

/// World placement of every link and joint for one configuration.
#[derive(Clone, Debug)]
pub struct KinematicState {
    pub links: Vec<Isometry3<f64>>,
    /// World-frame joint axes.
    pub axes: Vec<Vec3>,
    /// World-frame joint anchor points.
    pub anchors: Vec<Vec3>,
}

impl KinematicState {
    pub fn compute(model: &RigidBodyModel, q: &DVector<f64>) -> Result<Self, KinematicsError> {
        check_len(q, model.n())?;
        let topo = model.topo();
        let nl = model.links().len();
        let nj = model.joints().len();
        let mut links = vec![Isometry3::identity(); nl];
        let mut axes = vec![Vec3::zeros(); nj];
        let mut anchors = vec![Vec3::zeros(); nj];
        for (j, joint) in model.joints().iter().enumerate() {
            let frame = links[topo.joint_parent[j]] * joint.origin;
            axes[j] = frame.rotation * joint.axis;
            anchors[j] = frame.translation.vector;
            links[topo.joint_child[j]] = match (joint.kind, topo.joint_coord[j]) {
                (JointKind::Revolute, Some(c)) => {
                    let mut child = frame;
                    child.rotation = frame.rotation * axis_rotation(&joint.axis, q[c]);
                    child
                }
                _ => frame,
            };
        }
        Ok(Self { links, axes, anchors })
    }

    pub fn frame_pose(&self, model: &RigidBodyModel, frame: &str) -> Result<Isometry3<f64>, KinematicsError> {
        let f = model.frame(frame)?;
        Ok(self.links[f.link] * f.placement)
    }

    /// 6×n Jacobian of a world point rigidly attached to `link`.
    pub(crate) fn point_jacobian(&self, model: &RigidBodyModel, link: usize, point: &Vec3) -> Matrix6xX<f64> {
        let topo = model.topo();
        let mut jac = Matrix6xX::zeros(model.n());
        for &j in &topo.link_path[link] {
            if let Some(c) = topo.joint_coord[j] {
                let z = self.axes[j];
                let lin = z.cross(&(point - self.anchors[j]));
                jac.fixed_view_mut::<3, 1>(0, c).copy_from(&lin);
                jac.fixed_view_mut::<3, 1>(3, c).copy_from(&z);
            }
        }
        jac
    }
}

pub fn forward_kinematics(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    frame: &str,
) -> Result<Isometry3<f64>, KinematicsError> {
    KinematicState::compute(model, q)?.frame_pose(model, frame)
}

/// World-aligned 6×n Jacobian of `frame` (linear rows, then angular rows).
pub fn frame_jacobian(model: &RigidBodyModel, q: &DVector<f64>, frame: &str) -> Result<DMatrix<f64>, KinematicsError> {
    let state = KinematicState::compute(model, q)?;
    let f = model.frame(frame)?;
    let pose = state.links[f.link] * f.placement;
    let jac = state.point_jacobian(model, f.link, &pose.translation.vector);
    Ok(DMatrix::from_iterator(6, model.n(), jac.iter().copied()))
}

/// Residual, constraint Jacobian and the velocity-product term of the loop
/// closures.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosureState {
    pub phi: DVector<f64>,
    pub jc: DMatrix<f64>,
    pub jc_dot_qdot: DVector<f64>,
}

fn closure_terms(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    with_jacobian: bool,
) -> Result<(DVector<f64>, DMatrix<f64>), KinematicsError> {
    if model.closures().is_empty() {
        return Err(KinematicsError::NoClosures);
    }
    let state = KinematicState::compute(model, q)?;
    let m = model.n_constraints();
    let n = model.n();
    let mut phi = DVector::zeros(m);
    let mut jc = DMatrix::zeros(if with_jacobian { m } else { 0 }, n);
    let mut row = 0;
    for closure in model.closures() {
        let fa = model.frame(&closure.frame_a)?;
        let fb = model.frame(&closure.frame_b)?;
        let pa = state.links[fa.link] * fa.placement;
        let pb = state.links[fb.link] * fb.placement;
        let ra = pa.rotation.to_rotation_matrix();
        let ra_t = ra.matrix().transpose();
        let gap_world = pb.translation.vector - pa.translation.vector;
        let gap = ra_t * gap_world;
        let rel: UnitQuaternion<f64> = pa.rotation.inverse() * pb.rotation;
        let theta = so3_log(&rel);

        let (ja, jb) = if with_jacobian {
            (
                state.point_jacobian(model, fa.link, &pa.translation.vector),
                state.point_jacobian(model, fb.link, &pb.translation.vector),
            )
        } else {
            (Matrix6xX::zeros(0), Matrix6xX::zeros(0))
        };
        let (lin_rows, ang_rows) = if with_jacobian {
            let jva = ja.fixed_rows::<3>(0);
            let jwa = ja.fixed_rows::<3>(3);
            let jvb = jb.fixed_rows::<3>(0);
            let jwb = jb.fixed_rows::<3>(3);
            // d/dt Ra^T (pb - pa) = Ra^T (vb - va + gap x wa)
            let lin = ra_t * (jvb - jva + skew(&gap_world) * jwa);
            let rb_t = pb.rotation.to_rotation_matrix().matrix().transpose();
            let ang = so3_right_jacobian_inv(&theta) * rb_t * (jwb - jwa);
            (Some(lin), Some(ang))
        } else {
            (None, None)
        };

        for dof in &closure.dofs {
            let k = dof.index();
            if dof.is_rotational() {
                phi[row] = theta[k - 3];
                if let Some(ang) = &ang_rows {
                    jc.row_mut(row).copy_from(&ang.row(k - 3));
                }
            } else {
                phi[row] = gap[k];
                if let Some(lin) = &lin_rows {
                    jc.row_mut(row).copy_from(&lin.row(k));
                }
            }
            row += 1;
        }
    }
    Ok((phi, jc))
}

/// Signed closure gaps φ(q), one entry per constrained dof.
pub fn closure_residual(model: &RigidBodyModel, q: &DVector<f64>) -> Result<DVector<f64>, KinematicsError> {
    Ok(closure_terms(model, q, false)?.0)
}

/// Step used for the time-domain finite difference of `Jc q̇`.
pub const JDOT_STEP: f64 = 1e-6;

/// Largest actuated increment per continuation stage of an unseeded solve, rad.
const CONTINUATION_STEP: f64 = 0.05;

/// φ, J_c and J̇_c q̇. The last term is a central difference of `J_c` along
/// `q̇` with step [`JDOT_STEP`].
pub fn closure_jacobian(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
) -> Result<ClosureState, KinematicsError> {
    check_len(qd, model.n())?;
    let (phi, jc) = closure_terms(model, q, true)?;
    let jc_dot_qdot = if qd.iter().all(|&v| v == 0.0) {
        DVector::zeros(phi.len())
    } else {
        let (_, jp) = closure_terms(model, &(q + qd * JDOT_STEP), true)?;
        let (_, jm) = closure_terms(model, &(q - qd * JDOT_STEP), true)?;
        (jp - jm) * qd / (2.0 * JDOT_STEP)
    };
    Ok(ClosureState { phi, jc, jc_dot_qdot })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureSolver {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub max_condition: f64,
}

impl Default for ClosureSolver {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 50, max_halvings: 20, max_condition: 1e12 }
    }
}

fn passive_block(jc: &DMatrix<f64>, n_a: usize, n_p: usize) -> DMatrix<f64> {
    jc.columns(n_a, n_p).into_owned()
}

fn check_square(model: &RigidBodyModel) -> Result<(), KinematicsError> {
    let m = model.n_constraints();
    if m != model.n_passive() {
        return Err(KinematicsError::NonSquareClosure { constraints: m, passive: model.n_passive() });
    }
    Ok(())
}

impl ClosureSolver {
    /// Damped Newton on the passive coordinates with backtracking halving.
    pub fn solve(
        &self,
        model: &RigidBodyModel,
        q_a: &DVector<f64>,
        seed: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>, KinematicsError> {
        check_len(q_a, model.n_actuated())?;
        check_square(model)?;
        let (n_a, n_p) = (model.n_actuated(), model.n_passive());
        let mut q = DVector::zeros(model.n());
        q.rows_mut(0, n_a).copy_from(q_a);
        if n_p == 0 {
            return Ok(q);
        }
        match seed {
            Some(s) => {
                check_len(s, n_p)?;
                q.rows_mut(n_a, n_p).copy_from(s);
            }
            None => {
                // Walk out from the reference pose so the solution stays on
                // the reference assembly branch.
                let steps = (q_a.amax() / CONTINUATION_STEP).ceil().max(1.0) as usize;
                let mut passive = DVector::from_column_slice(&model.parts().reference_passive);
                for i in 1..steps {
                    let partial = q_a * (i as f64 / steps as f64);
                    passive = self.solve(model, &partial, Some(&passive))?.rows(n_a, n_p).into_owned();
                }
                q.rows_mut(n_a, n_p).copy_from(&passive);
            }
        }

        let (mut phi, mut jc) = closure_terms(model, &q, true)?;
        let mut norm = inf_norm(&phi);
        // Once within tolerance, one more Newton step is taken (if it helps)
        // so the residual ends near roundoff.
        let mut polished = false;
        for _ in 0..self.max_iterations {
            if norm <= self.tolerance {
                if polished {
                    return Ok(q);
                }
                polished = true;
            }
            let jp = passive_block(&jc, n_a, n_p);
            let condition = condition_number(&jp);
            if condition > self.max_condition {
                return Err(KinematicsError::Singular { condition });
            }
            let step = jp.lu().solve(&(-&phi)).ok_or(KinematicsError::Singular { condition })?;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=self.max_halvings {
                let mut trial = q.clone();
                let mut passive = trial.rows_mut(n_a, n_p);
                passive += &step * alpha;
                let (tphi, tjc) = closure_terms(model, &trial, true)?;
                let tnorm = inf_norm(&tphi);
                if tnorm < norm {
                    accepted = Some((trial, tphi, tjc, tnorm));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((tq, tphi, tjc, tnorm)) => {
                    q = tq;
                    phi = tphi;
                    jc = tjc;
                    norm = tnorm;
                }
                // No further decrease is possible; a converged residual is final.
                None if norm <= self.tolerance => return Ok(q),
                None => break,
            }
        }
        if norm <= self.tolerance {
            return Ok(q);
        }
        Err(KinematicsError::NonConvergence { iterations: self.max_iterations, residual: norm })
    }
}

/// Solve the passive coordinates for the given actuated ones. Without a seed
/// the model's stored reference passive solution is used as the start.
pub fn solve_closure(
    model: &RigidBodyModel,
    q_a: &DVector<f64>,
    seed: Option<&DVector<f64>>,
) -> Result<DVector<f64>, KinematicsError> {
    ClosureSolver::default().solve(model, q_a, seed)
}

/// Full-coordinate velocity and acceleration consistent with the closure for
/// prescribed actuated rates.
pub fn resolve_passive_rates(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd_a: &DVector<f64>,
    qdd_a: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), KinematicsError> {
    let (n_a, n_p) = (model.n_actuated(), model.n_passive());
    check_len(q, model.n())?;
    check_len(qd_a, n_a)?;
    check_len(qdd_a, n_a)?;
    let mut qd = DVector::zeros(model.n());
    let mut qdd = DVector::zeros(model.n());
    qd.rows_mut(0, n_a).copy_from(qd_a);
    qdd.rows_mut(0, n_a).copy_from(qdd_a);
    if n_p == 0 {
        return Ok((qd, qdd));
    }
    check_square(model)?;
    let (_, jc) = closure_terms(model, q, true)?;
    let jp = passive_block(&jc, n_a, n_p);
    let ja = jc.columns(0, n_a).into_owned();
    let lu = jp.clone().lu();
    let singular = || KinematicsError::Singular { condition: condition_number(&jp) };
    let qd_p = lu.solve(&(-(&ja * qd_a))).ok_or_else(singular)?;
    qd.rows_mut(n_a, n_p).copy_from(&qd_p);
    let bias = closure_jacobian(model, q, &qd)?.jc_dot_qdot;
    let qdd_p = lu.solve(&(-(&ja * qdd_a) - bias)).ok_or_else(singular)?;
    qdd.rows_mut(n_a, n_p).copy_from(&qdd_p);
    Ok((qd, qdd))
}

/// Which pose-error rows an IK step acts on (x, y, z, rx, ry, rz).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskMask(pub [bool; 6]);

impl TaskMask {
    pub const POSITION: TaskMask = TaskMask([true, true, true, false, false, false]);
    pub const FULL: TaskMask = TaskMask([true; 6]);

    fn rows(&self) -> Vec<usize> {
        (0..6).filter(|&i| self.0[i]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkSettings {
    pub damping: f64,
    pub mask: TaskMask,
    /// Clamp on the actuated step norm, rad.
    pub max_step: f64,
}

impl IkSettings {
    /// Position-only for the CR4 family (J4 yaw is commanded separately),
    /// full pose otherwise.
    pub fn for_model(model: &RigidBodyModel) -> Self {
        let mask = match model.kind() {
            RobotKind::Cr4 | RobotKind::Cr4Serial => TaskMask::POSITION,
            _ => TaskMask::FULL,
        };
        Self { damping: 1e-3, mask, max_step: 0.2 }
    }
}

/// World-frame pose error (position, rotation vector) from current to target.
pub fn pose_error(current: &Isometry3<f64>, target: &Isometry3<f64>) -> [f64; 6] {
    let dp = target.translation.vector - current.translation.vector;
    let dr = so3_log(&(target.rotation * current.rotation.inverse()));
    [dp.x, dp.y, dp.z, dr.x, dr.y, dr.z]
}

/// Map from actuated rates to full rates on the closure manifold: q̇ = G q̇_a.
pub(crate) fn closure_tangent(model: &RigidBodyModel, q: &DVector<f64>) -> Result<DMatrix<f64>, KinematicsError> {
    let (n_a, n_p) = (model.n_actuated(), model.n_passive());
    let mut g = DMatrix::zeros(model.n(), n_a);
    g.view_mut((0, 0), (n_a, n_a)).fill_with_identity();
    if n_p > 0 {
        check_square(model)?;
        let (_, jc) = closure_terms(model, q, true)?;
        let jp = passive_block(&jc, n_a, n_p);
        let ja = jc.columns(0, n_a).into_owned();
        let condition = condition_number(&jp);
        let sol = jp.lu().solve(&(-ja)).ok_or(KinematicsError::Singular { condition })?;
        g.view_mut((n_a, 0), (n_p, n_a)).copy_from(&sol);
    }
    Ok(g)
}

/// One damped least-squares step on the actuated coordinates toward
/// `target`, followed by a closure re-solve warm-started from `q`.
pub fn ik_step(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    target: &Isometry3<f64>,
    frame: &str,
    settings: &IkSettings,
) -> Result<DVector<f64>, KinematicsError> {
    let (n_a, n_p) = (model.n_actuated(), model.n_passive());
    let state = KinematicState::compute(model, q)?;
    let pose = state.frame_pose(model, frame)?;
    let err = pose_error(&pose, target);
    let rows = settings.mask.rows();
    let e = DVector::from_iterator(rows.len(), rows.iter().map(|&r| err[r]));
    if e.iter().all(|&v| v == 0.0) {
        return Ok(q.clone());
    }
    let full = frame_jacobian(model, q, frame)?;
    let jac = full.select_rows(&rows) * closure_tangent(model, q)?;
    let lambda2 = settings.damping * settings.damping;
    let jjt = &jac * jac.transpose() + DMatrix::identity(rows.len(), rows.len()) * lambda2;
    let y = match jjt.clone().cholesky() {
        Some(ch) => ch.solve(&e),
        None => jjt.lu().solve(&e).unwrap_or_else(|| DVector::zeros(rows.len())),
    };
    let mut step = jac.transpose() * y;
    let norm = step.norm();
    if norm > settings.max_step {
        step *= settings.max_step / norm;
    }
    let q_a = q.rows(0, n_a) + step;
    let seed = q.rows(n_a, n_p).into_owned();
    solve_closure(model, &q_a, Some(&seed))
}

/// Iterate [`ik_step`] until the masked pose error is below `tolerance`.
pub fn solve_ik(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    target: &Isometry3<f64>,
    frame: &str,
    settings: &IkSettings,
    tolerance: f64,
    max_iterations: usize,
) -> Result<DVector<f64>, KinematicsError> {
    let rows = settings.mask.rows();
    let masked = |q: &DVector<f64>| -> Result<f64, KinematicsError> {
        let err = pose_error(&forward_kinematics(model, q, frame)?, target);
        Ok(rows.iter().map(|&r| err[r] * err[r]).sum::<f64>().sqrt())
    };
    let mut q = q.clone();
    let mut error = masked(&q)?;
    for _ in 0..max_iterations {
        if error <= tolerance {
            return Ok(q);
        }
        q = ik_step(model, &q, target, frame, settings)?;
        error = masked(&q)?;
    }
    if error <= tolerance {
        Ok(q)
    } else {
        Err(KinematicsError::IkNotConverged { error })
    }
}
