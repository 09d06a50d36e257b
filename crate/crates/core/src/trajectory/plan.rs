use nalgebra::{DMatrix, DVector, Isometry3, Translation3};

use super::pchip::Pchip;
use super::profile::{trapezoid_profile, TrapezoidProfile};
use super::{Limit, MotionKind, MotionPrimitive, TrajectoryError, TrajectorySamples, Waypoint, DEFAULT_SAMPLE_DS};
use crate::kinematics::{forward_kinematics, solve_closure, solve_ik, IkSettings};
use crate::model::RigidBodyModel;

pub const IK_TOLERANCE: f64 = 1e-10;
const IK_MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug)]
enum PathShape {
    /// q(s) = from + s·delta for s in [0, 1].
    Line { from: DVector<f64>, delta: DVector<f64> },
    /// One monotone cubic per joint over path length.
    Spline(Vec<Pchip>),
}

/// One planned primitive: a joint-space path composed with a time profile.
#[derive(Clone, Debug)]
pub struct Segment {
    pub kind: MotionKind,
    pub profile: TrapezoidProfile,
    shape: PathShape,
    /// Final full configuration (actuated then passive).
    pub end: DVector<f64>,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.profile.duration
    }

    /// Actuated position at time `t` after the segment start.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let (s, _, _) = self.profile.sample(t);
        match &self.shape {
            PathShape::Line { from, delta } => from + delta * s,
            PathShape::Spline(curves) => DVector::from_iterator(curves.len(), curves.iter().map(|c| c.eval(s).0)),
        }
    }

    pub fn end_actuated(&self, n_a: usize) -> DVector<f64> {
        self.end.rows(0, n_a).into_owned()
    }

    /// This segment alone on a uniform grid.
    pub fn sample(&self, dt: f64) -> Result<TrajectorySamples, TrajectoryError> {
        sample_segments(std::slice::from_ref(self), dt)
    }
}

fn check_dims(v: &DVector<f64>, n: usize) -> Result<(), TrajectoryError> {
    if v.len() != n {
        return Err(TrajectoryError::Dimension { expected: n, got: v.len() });
    }
    Ok(())
}

fn check_position_limits(model: &RigidBodyModel, q_a: &DVector<f64>) -> Result<(), TrajectoryError> {
    for (j, joint) in model.actuated_joints().enumerate() {
        let [lower, upper] = joint.limits;
        let value = q_a[j];
        if !(value >= lower - 1e-12 && value <= upper + 1e-12) {
            return Err(TrajectoryError::JointLimit { joint: joint.name.clone(), value, lower, upper });
        }
    }
    Ok(())
}

fn full_from(model: &RigidBodyModel, q_a: &DVector<f64>, seed: Option<&DVector<f64>>) -> Result<DVector<f64>, TrajectoryError> {
    let n_a = model.n_actuated();
    let passive_seed = seed.map(|q| q.rows(n_a, model.n_passive()).into_owned());
    Ok(solve_closure(model, q_a, passive_seed.as_ref())?)
}

fn joint_limits(limit: &Limit, n_a: usize, kind: MotionKind) -> Result<Vec<f64>, TrajectoryError> {
    match limit {
        Limit::PerJoint(v) if v.len() == n_a => Ok(v.clone()),
        Limit::PerJoint(v) => Err(TrajectoryError::Dimension { expected: n_a, got: v.len() }),
        Limit::Scalar(_) => Err(TrajectoryError::LimitShape(kind, "per-joint")),
    }
}

fn path_limit(limit: &Limit, kind: MotionKind) -> Result<f64, TrajectoryError> {
    match limit {
        Limit::Scalar(v) => Ok(*v),
        Limit::PerJoint(_) => Err(TrajectoryError::LimitShape(kind, "scalar")),
    }
}

/// Resolve a waypoint to a full configuration, warm-started from `q_full`.
fn resolve_target(
    model: &RigidBodyModel,
    q_full: &DVector<f64>,
    target: &Waypoint,
) -> Result<DVector<f64>, TrajectoryError> {
    match target {
        Waypoint::Joint { joint_target } => {
            let q_a = DVector::from_column_slice(joint_target);
            check_dims(&q_a, model.n_actuated())?;
            full_from(model, &q_a, Some(q_full))
        }
        Waypoint::Cartesian { pose_target } => {
            let pose = pose_target.to_isometry()?;
            let settings = IkSettings::for_model(model);
            solve_ik(model, q_full, &pose, model.tool_frame(), &settings, IK_TOLERANCE, IK_MAX_ITERATIONS)
                .map_err(|source| TrajectoryError::Ik { sample: 0, source })
        }
    }
}

/// Synchronized point-to-point joint move. Every joint follows the same
/// normalized trapezoid, whose limits are the tightest per-joint ratios
/// vmax_j/d_j and amax_j/d_j, so all joints start and stop together.
pub fn plan_movej(
    model: &RigidBodyModel,
    q_from: &DVector<f64>,
    primitive: &MotionPrimitive,
) -> Result<Segment, TrajectoryError> {
    check_dims(q_from, model.n_actuated())?;
    let start = full_from(model, q_from, None)?;
    plan_movej_full(model, &start, primitive)
}

fn plan_movej_full(
    model: &RigidBodyModel,
    start: &DVector<f64>,
    primitive: &MotionPrimitive,
) -> Result<Segment, TrajectoryError> {
    let n_a = model.n_actuated();
    if primitive.kind != MotionKind::MoveJ {
        return Err(TrajectoryError::LimitShape(primitive.kind, "MoveJ"));
    }
    if !primitive.vmax.positive() || !primitive.amax.positive() {
        return Err(TrajectoryError::NonPositiveLimit);
    }
    let vmax = joint_limits(&primitive.vmax, n_a, primitive.kind)?;
    let amax = joint_limits(&primitive.amax, n_a, primitive.kind)?;
    for (j, joint) in model.actuated_joints().enumerate() {
        if vmax[j] > joint.velocity_limit {
            return Err(TrajectoryError::CommandedSpeed { joint: joint.name.clone(), vmax: vmax[j], limit: joint.velocity_limit });
        }
    }
    let from = start.rows(0, n_a).into_owned();
    check_position_limits(model, &from)?;
    let end = resolve_target(model, start, &primitive.target)?;
    let to = end.rows(0, n_a).into_owned();
    check_position_limits(model, &to)?;

    let delta = &to - &from;
    let (mut v_norm, mut a_norm) = (f64::INFINITY, f64::INFINITY);
    for j in 0..n_a {
        let d = delta[j].abs();
        if d > 0.0 {
            v_norm = v_norm.min(vmax[j] / d);
            a_norm = a_norm.min(amax[j] / d);
        }
    }
    let profile = if v_norm.is_finite() {
        trapezoid_profile(1.0, v_norm, a_norm)?
    } else {
        trapezoid_profile(0.0, 1.0, 1.0)?
    };
    Ok(Segment { kind: MotionKind::MoveJ, profile, shape: PathShape::Line { from, delta }, end })
}

/// Straight-line tool move with a trapezoidal path-speed profile. Joint
/// samples come from warm-started IK every `sample_ds` metres along the
/// line and are joined by monotone cubics in path length.
pub fn plan_movel(
    model: &RigidBodyModel,
    q_from: &DVector<f64>,
    primitive: &MotionPrimitive,
    sample_ds: f64,
) -> Result<Segment, TrajectoryError> {
    check_dims(q_from, model.n_actuated())?;
    let start = full_from(model, q_from, None)?;
    plan_movel_full(model, &start, primitive, sample_ds)
}

fn plan_movel_full(
    model: &RigidBodyModel,
    start: &DVector<f64>,
    primitive: &MotionPrimitive,
    sample_ds: f64,
) -> Result<Segment, TrajectoryError> {
    let n_a = model.n_actuated();
    if primitive.kind != MotionKind::MoveL {
        return Err(TrajectoryError::LimitShape(primitive.kind, "MoveL"));
    }
    if !primitive.vmax.positive() || !primitive.amax.positive() || !(sample_ds > 0.0) {
        return Err(TrajectoryError::NonPositiveLimit);
    }
    let vmax = path_limit(&primitive.vmax, primitive.kind)?;
    let amax = path_limit(&primitive.amax, primitive.kind)?;
    let from = start.rows(0, n_a).into_owned();
    check_position_limits(model, &from)?;

    let frame = model.tool_frame();
    let p0 = forward_kinematics(model, start, frame)?;
    let target = match &primitive.target {
        Waypoint::Cartesian { pose_target } => pose_target.to_isometry()?,
        Waypoint::Joint { joint_target } => {
            let q_a = DVector::from_column_slice(joint_target);
            check_dims(&q_a, n_a)?;
            forward_kinematics(model, &full_from(model, &q_a, Some(start))?, frame)?
        }
    };
    let line = target.translation.vector - p0.translation.vector;
    let length = line.norm();
    let profile = trapezoid_profile(length, vmax, amax)?;
    if length == 0.0 {
        let delta = DVector::zeros(n_a);
        return Ok(Segment { kind: MotionKind::MoveL, profile, shape: PathShape::Line { from, delta }, end: start.clone() });
    }

    let settings = IkSettings::for_model(model);
    let count = (length / sample_ds).ceil().max(1.0) as usize;
    let mut s_knots = Vec::with_capacity(count + 1);
    let mut q_knots: Vec<DVector<f64>> = Vec::with_capacity(count + 1);
    let mut q = start.clone();
    s_knots.push(0.0);
    q_knots.push(from.clone());
    for i in 1..=count {
        let frac = i as f64 / count as f64;
        let pose = Isometry3::from_parts(
            Translation3::from(p0.translation.vector + line * frac),
            p0.rotation.slerp(&target.rotation, frac),
        );
        q = solve_ik(model, &q, &pose, frame, &settings, IK_TOLERANCE, IK_MAX_ITERATIONS)
            .map_err(|source| TrajectoryError::Ik { sample: i, source })?;
        s_knots.push(length * frac);
        q_knots.push(q.rows(0, n_a).into_owned());
    }
    for qk in &q_knots {
        check_position_limits(model, qk)?;
    }

    let curves: Vec<Pchip> = (0..n_a)
        .map(|j| Pchip::new(s_knots.clone(), q_knots.iter().map(|qk| qk[j]).collect()))
        .collect();

    // Joint speed = |dq/ds| · ṡ; report the worst knot if any limit is broken.
    let mut worst: Option<(usize, usize, f64, f64)> = None;
    for (j, joint) in model.actuated_joints().enumerate() {
        for (i, (&s, &slope)) in s_knots.iter().zip(curves[j].knot_slopes()).enumerate() {
            let speed = slope.abs() * profile.speed_at(s);
            let excess = speed - joint.velocity_limit;
            if excess > 0.0 && worst.map_or(true, |w| excess > w.2 - w.3) {
                worst = Some((j, i, speed, joint.velocity_limit));
            }
        }
    }
    if let Some((j, sample, speed, limit)) = worst {
        let joint = model.coordinate_joint(j).name.clone();
        return Err(TrajectoryError::VelocityLimitExceeded { joint, sample, speed, limit });
    }
    Ok(Segment { kind: MotionKind::MoveL, profile, shape: PathShape::Spline(curves), end: q })
}

/// Concatenate segments (zero-velocity junctions) on a uniform grid.
///
/// Positions are evaluated exactly on the grid; velocities and accelerations
/// are the central first and second differences of the sampled positions,
/// with zero velocity at both ends.
pub fn sample_segments(segments: &[Segment], dt: f64) -> Result<TrajectorySamples, TrajectoryError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(TrajectoryError::InvalidDt(dt));
    }
    let Some(last) = segments.last() else {
        return Err(TrajectoryError::EmptyProgram);
    };
    let n_a = match &last.shape {
        PathShape::Line { from, .. } => from.len(),
        PathShape::Spline(c) => c.len(),
    };
    let mut starts = Vec::with_capacity(segments.len());
    let mut total = 0.0;
    for seg in segments {
        starts.push(total);
        total += seg.duration();
    }
    let steps = if total > 0.0 { (total / dt - 1e-9).ceil() as usize } else { 0 };
    let k = steps + 1;
    let t: Vec<f64> = (0..k).map(|i| i as f64 * dt).collect();

    let mut q = DMatrix::zeros(k, n_a);
    let final_q = last.eval(last.duration());
    let mut seg_idx = 0;
    for (i, &ti) in t.iter().enumerate() {
        let row = if ti >= total {
            final_q.clone()
        } else {
            while seg_idx + 1 < segments.len() && ti >= starts[seg_idx + 1] {
                seg_idx += 1;
            }
            segments[seg_idx].eval(ti - starts[seg_idx])
        };
        q.set_row(i, &row.transpose());
    }

    let mut qd = DMatrix::zeros(k, n_a);
    let mut qdd = DMatrix::zeros(k, n_a);
    for i in 1..k.saturating_sub(1) {
        let (prev, cur, next) = (q.row(i - 1), q.row(i), q.row(i + 1));
        qd.set_row(i, &((next - prev) / (2.0 * dt)));
        qdd.set_row(i, &((next - cur * 2.0 + prev) / (dt * dt)));
    }
    if k >= 2 {
        // One-sided second differences at rest.
        let first = (q.row(1) - q.row(0)) * (2.0 / (dt * dt));
        let end = (q.row(k - 2) - q.row(k - 1)) * (2.0 / (dt * dt));
        qdd.set_row(0, &first);
        qdd.set_row(k - 1, &end);
    }

    let primitive_boundaries = starts.iter().map(|&s| ((s / dt) - 1e-9).ceil().max(0.0) as usize).collect();
    Ok(TrajectorySamples { dt, t, q_a: q, qd_a: qd, qdd_a: qdd, primitive_boundaries })
}

/// Plan every primitive in order and sample the result on a `dt` grid.
pub fn compile_program(
    model: &RigidBodyModel,
    start_q: &DVector<f64>,
    primitives: &[MotionPrimitive],
    dt: f64,
) -> Result<TrajectorySamples, TrajectoryError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(TrajectoryError::InvalidDt(dt));
    }
    if primitives.is_empty() {
        return Err(TrajectoryError::EmptyProgram);
    }
    check_dims(start_q, model.n_actuated())?;
    check_position_limits(model, start_q)?;
    let mut current = full_from(model, start_q, None)?;
    let mut segments = Vec::with_capacity(primitives.len());
    for primitive in primitives {
        let seg = match primitive.kind {
            MotionKind::MoveJ => plan_movej_full(model, &current, primitive)?,
            MotionKind::MoveL => plan_movel_full(model, &current, primitive, DEFAULT_SAMPLE_DS)?,
        };
        current = seg.end.clone();
        segments.push(seg);
    }
    sample_segments(&segments, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_cr4, build_cr6, ScalingLaw};
    use approx::assert_relative_eq;

    fn cr6() -> RigidBodyModel {
        build_cr6(1.0, ScalingLaw::GEOMETRIC).unwrap()
    }

    #[test]
    fn movej_to_start_is_empty() {
        let m = cr6();
        let q = DVector::from_element(6, 0.1);
        let p = MotionPrimitive::move_j(Waypoint::joint(q.as_slice()), &[1.0; 6], &[2.0; 6]);
        let seg = plan_movej(&m, &q, &p).unwrap();
        assert_eq!(seg.duration(), 0.0);
        assert_eq!(seg.sample(0.004).unwrap().len(), 1);
    }

    #[test]
    fn movej_synchronizes_joints() {
        let m = cr6();
        let from = DVector::zeros(6);
        let target = [1.0, 0.0, 0.0, 2.0, 0.0, 0.0];
        let p = MotionPrimitive::move_j(Waypoint::joint(&target), &[1.0; 6], &[1.0; 6]);
        let seg = plan_movej(&m, &from, &p).unwrap();
        // The 2 rad joint alone: accel 1 s, cruise 1 s, decel 1 s.
        assert_relative_eq!(seg.duration(), 3.0, epsilon = 1e-12);
        let mid = seg.eval(1.5);
        assert_relative_eq!(mid[3], 1.0, epsilon = 1e-12);
        assert_relative_eq!(mid[0], 0.5, epsilon = 1e-12);
        let s = seg.sample(0.001).unwrap();
        assert!(s.peak_speeds()[3] <= 1.0 + 1e-9);
        assert_relative_eq!(s.peak_speeds()[3], 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.peak_speeds()[0], 0.5, epsilon = 1e-9);
        assert!(s.qdd_a.amax() <= 1.0 + 1e-9);
    }

    #[test]
    fn movej_rejects_out_of_limit_target() {
        let m = build_cr4(1.0, ScalingLaw::GEOMETRIC).unwrap();
        let p = MotionPrimitive::move_j(Waypoint::joint(&[0.0, 2.0, 0.0, 0.0]), &[1.0; 4], &[1.0; 4]);
        assert!(matches!(plan_movej(&m, &DVector::zeros(4), &p), Err(TrajectoryError::JointLimit { .. })));
    }

    #[test]
    fn movel_zero_length_is_empty() {
        let m = build_cr4(1.0, ScalingLaw::GEOMETRIC).unwrap();
        let q = DVector::from_vec(vec![0.0, 0.4, -0.3, 0.0]);
        let full = solve_closure(&m, &q, None).unwrap();
        let pose = forward_kinematics(&m, &full, m.tool_frame()).unwrap();
        let seg = plan_movel(&m, &q, &MotionPrimitive::move_l(Waypoint::pose(&pose), 0.5, 2.0), 0.002).unwrap();
        assert_eq!(seg.duration(), 0.0);
    }

    #[test]
    fn movel_follows_straight_line() {
        let m = build_cr4(1.6, ScalingLaw::CALIBRATED).unwrap();
        let q = DVector::from_vec(vec![0.3, 0.5, -0.6, 0.0]);
        let full = solve_closure(&m, &q, None).unwrap();
        let p0 = forward_kinematics(&m, &full, m.tool_frame()).unwrap();
        let mut target = p0;
        target.translation.vector.z -= 0.3;
        let seg = plan_movel(&m, &q, &MotionPrimitive::move_l(Waypoint::pose(&target), 0.5, 2.0), 0.002).unwrap();
        let samples = seg.sample(0.004).unwrap();
        let mut worst: f64 = 0.0;
        let mut seed = full.clone();
        for k in 0..samples.len() {
            let q_a = samples.q_a.row(k).transpose();
            seed = solve_closure(&m, &q_a, Some(&seed.rows(4, 2).into_owned())).unwrap();
            let p = forward_kinematics(&m, &seed, m.tool_frame()).unwrap().translation.vector;
            let d = p - p0.translation.vector;
            worst = worst.max((d.x * d.x + d.y * d.y).sqrt());
        }
        assert!(worst <= 1e-4, "deviation {worst}");
        assert_eq!(samples.qd_a.row(0).amax(), 0.0);
    }

    #[test]
    fn compile_rejects_bad_input() {
        let m = cr6();
        let q = DVector::zeros(6);
        assert!(matches!(compile_program(&m, &q, &[], 0.004), Err(TrajectoryError::EmptyProgram)));
        let p = MotionPrimitive::move_j(Waypoint::joint(&[0.1; 6]), &[1.0; 6], &[1.0; 6]);
        assert!(matches!(compile_program(&m, &q, &[p], 0.0), Err(TrajectoryError::InvalidDt(_))));
    }

    #[test]
    fn single_movej_matches_segment_sampling() {
        let m = cr6();
        let q = DVector::zeros(6);
        let p = MotionPrimitive::move_j(Waypoint::joint(&[0.3, -0.2, 0.1, 0.0, 0.5, 0.0]), &[1.0; 6], &[2.0; 6]);
        let a = compile_program(&m, &q, std::slice::from_ref(&p), 0.004).unwrap();
        let b = plan_movej(&m, &q, &p).unwrap().sample(0.004).unwrap();
        assert_eq!(a, b);
    }
}
