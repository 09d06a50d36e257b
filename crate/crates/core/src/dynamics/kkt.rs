//! Closure-consistent inverse and forward dynamics.
//!
//! The inverse problem solves, for unknowns (q̈, τ_a, λ),
//!
//! ```text
//! [ M   -Sᵀ  -J_cᵀ ] [ q̈  ]   [ -h        ]
//! [ S    0    0   ] [ τ_a ] = [ q̈_a       ]
//! [ J_c  0    0   ] [ λ   ]   [ -J̇_c q̇   ]
//! ```
//!
//! where `S` selects the actuated coordinates.

use nalgebra::{DMatrix, DVector};

use super::rnea::{dynamics_terms, kinetic_energy, potential_energy};
use super::DynamicsError;
use crate::kinematics::{
    check_len, closure_jacobian, resolve_passive_rates, solve_closure, ClosureState, KinematicsError,
};
use crate::math::{inf_norm, solve_refined, Vec3};
use crate::model::RigidBodyModel;

/// Closure residual a configuration must meet before dynamics are evaluated.
pub const SOLVED_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedIdResult {
    /// Actuated joint torques, coordinate order.
    pub tau_a: DVector<f64>,
    /// Closure constraint forces.
    pub lambda: DVector<f64>,
    /// Max-norm of the KKT residual over all three row blocks.
    pub kkt_residual: f64,
    /// Max-norm of the bias vector, for relative residual checks.
    pub bias_norm: f64,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

fn closure_state(model: &RigidBodyModel, q: &DVector<f64>, qd: &DVector<f64>) -> Result<ClosureState, DynamicsError> {
    if model.closures().is_empty() {
        let n = model.n();
        return Ok(ClosureState { phi: DVector::zeros(0), jc: DMatrix::zeros(0, n), jc_dot_qdot: DVector::zeros(0) });
    }
    let state = closure_jacobian(model, q, qd)?;
    let residual = inf_norm(&state.phi);
    if residual > SOLVED_TOLERANCE {
        return Err(DynamicsError::Unsolved { residual });
    }
    Ok(state)
}

/// Full-coordinate rates for prescribed actuated rates, accepting open trees.
fn full_rates(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd_a: &DVector<f64>,
    qdd_a: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), DynamicsError> {
    check_len(q, model.n())?;
    if !model.closures().is_empty() {
        let residual = inf_norm(&crate::kinematics::closure_residual(model, q)?);
        if residual > SOLVED_TOLERANCE {
            return Err(DynamicsError::Unsolved { residual });
        }
    }
    resolve_passive_rates(model, q, qd_a, qdd_a).map_err(|e| match e {
        KinematicsError::Singular { condition } => DynamicsError::SingularKkt { condition },
        other => other.into(),
    })
}

/// Constrained inverse dynamics through the unified KKT system.
pub fn constrained_inverse_dynamics(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd_a: &DVector<f64>,
    qdd_a: &DVector<f64>,
    gravity: &Vec3,
) -> Result<ConstrainedIdResult, DynamicsError> {
    let (qd, _) = full_rates(model, q, qd_a, qdd_a)?;
    let (n, n_a) = (model.n(), model.n_actuated());
    let cs = closure_state(model, q, &qd)?;
    let m = cs.phi.len();
    let terms = dynamics_terms(model, q, &qd, gravity)?;

    let size = n + n_a + m;
    let mut k = DMatrix::zeros(size, size);
    let mut rhs = DVector::zeros(size);
    k.view_mut((0, 0), (n, n)).copy_from(&terms.mass);
    for i in 0..n_a {
        k[(i, n + i)] = -1.0;
        k[(n + i, i)] = 1.0;
    }
    if m > 0 {
        k.view_mut((0, n + n_a), (n, m)).copy_from(&(-cs.jc.transpose()));
        k.view_mut((n + n_a, 0), (m, n)).copy_from(&cs.jc);
        rhs.rows_mut(n + n_a, m).copy_from(&(-&cs.jc_dot_qdot));
    }
    rhs.rows_mut(0, n).copy_from(&(-&terms.bias));
    rhs.rows_mut(n, n_a).copy_from(qdd_a);

    let x = solve_refined(&k, &rhs).ok_or_else(|| DynamicsError::SingularKkt {
        condition: crate::math::condition_number(&k),
    })?;
    let kkt_residual = inf_norm(&(&k * &x - &rhs));
    Ok(ConstrainedIdResult {
        tau_a: x.rows(n, n_a).into_owned(),
        lambda: x.rows(n + n_a, m).into_owned(),
        kkt_residual,
        bias_norm: inf_norm(&terms.bias),
        qd,
        qdd: x.rows(0, n).into_owned(),
    })
}

/// Staged reduction: passive accelerations from the closure first, then the
/// square `[Sᵀ J_cᵀ] (τ_a, λ) = M q̈ + h` system.
pub fn constrained_inverse_dynamics_staged(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd_a: &DVector<f64>,
    qdd_a: &DVector<f64>,
    gravity: &Vec3,
) -> Result<ConstrainedIdResult, DynamicsError> {
    let (qd, qdd) = full_rates(model, q, qd_a, qdd_a)?;
    let (n, n_a) = (model.n(), model.n_actuated());
    let cs = closure_state(model, q, &qd)?;
    let m = cs.phi.len();
    if n_a + m != n {
        return Err(DynamicsError::Kinematics(KinematicsError::NonSquareClosure {
            constraints: m,
            passive: model.n_passive(),
        }));
    }
    let terms = dynamics_terms(model, q, &qd, gravity)?;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n_a, n_a)).fill_with_identity();
    if m > 0 {
        a.view_mut((0, n_a), (n, m)).copy_from(&cs.jc.transpose());
    }
    let b = &terms.mass * &qdd + &terms.bias;
    let x = solve_refined(&a, &b)
        .ok_or_else(|| DynamicsError::SingularKkt { condition: crate::math::condition_number(&a) })?;
    let tau_a = x.rows(0, n_a).into_owned();
    let lambda = x.rows(n_a, m).into_owned();
    let dyn_res = &terms.mass * &qdd - &a * &x + &terms.bias;
    let con_res = &cs.jc * &qdd + &cs.jc_dot_qdot;
    Ok(ConstrainedIdResult {
        tau_a,
        lambda,
        kkt_residual: inf_norm(&dyn_res).max(inf_norm(&con_res)),
        bias_norm: inf_norm(&terms.bias),
        qd,
        qdd,
    })
}

/// Constrained forward dynamics: returns (q̈, λ) for actuated torques.
pub fn constrained_forward_dynamics(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    tau_a: &DVector<f64>,
    gravity: &Vec3,
) -> Result<(DVector<f64>, DVector<f64>), DynamicsError> {
    forward_dynamics_inner(model, q, qd, tau_a, gravity, true)
}

fn forward_dynamics_inner(
    model: &RigidBodyModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    tau_a: &DVector<f64>,
    gravity: &Vec3,
    require_solved: bool,
) -> Result<(DVector<f64>, DVector<f64>), DynamicsError> {
    let (n, n_a) = (model.n(), model.n_actuated());
    check_len(qd, n)?;
    check_len(tau_a, n_a)?;
    let cs = if require_solved {
        closure_state(model, q, qd)?
    } else if model.closures().is_empty() {
        ClosureState { phi: DVector::zeros(0), jc: DMatrix::zeros(0, n), jc_dot_qdot: DVector::zeros(0) }
    } else {
        closure_jacobian(model, q, qd)?
    };
    let m = cs.phi.len();
    let terms = dynamics_terms(model, q, qd, gravity)?;
    let size = n + m;
    let mut k = DMatrix::zeros(size, size);
    k.view_mut((0, 0), (n, n)).copy_from(&terms.mass);
    let mut rhs = DVector::zeros(size);
    let mut generalized = -&terms.bias;
    for i in 0..n_a {
        generalized[i] += tau_a[i];
    }
    rhs.rows_mut(0, n).copy_from(&generalized);
    if m > 0 {
        k.view_mut((0, n), (n, m)).copy_from(&cs.jc.transpose());
        k.view_mut((n, 0), (m, n)).copy_from(&cs.jc);
        rhs.rows_mut(n, m).copy_from(&(-&cs.jc_dot_qdot));
    }
    let x = solve_refined(&k, &rhs)
        .ok_or_else(|| DynamicsError::SingularKkt { condition: crate::math::condition_number(&k) })?;
    Ok((x.rows(0, n).into_owned(), -x.rows(n, m).into_owned()))
}

/// Sampled history of a constrained rollout.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub t: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub qd: Vec<DVector<f64>>,
    /// Kinetic plus potential energy at each sample.
    pub energy: Vec<f64>,
    /// Work done by the actuated torques since t = 0.
    pub work: Vec<f64>,
    /// Largest closure residual seen after any step.
    pub max_closure_residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RolloutSettings {
    pub dt: f64,
    pub duration: f64,
    /// Re-solve the closure and project velocities after every step.
    pub reproject: bool,
    /// Record every `record_every` steps.
    pub record_every: usize,
}

/// RK4 integration of the constrained forward dynamics under a torque law
/// `torque(t, q, q̇)`. Work is integrated alongside the state with the same
/// scheme.
pub fn rollout<F>(
    model: &RigidBodyModel,
    q0: &DVector<f64>,
    qd0: &DVector<f64>,
    mut torque: F,
    gravity: &Vec3,
    settings: &RolloutSettings,
) -> Result<Rollout, DynamicsError>
where
    F: FnMut(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let n = model.n();
    let n_a = model.n_actuated();
    let n_p = model.n_passive();
    let steps = (settings.duration / settings.dt).round() as usize;
    let dt = settings.dt;
    let has_closure = !model.closures().is_empty();

    let mut deriv = |t: f64, q: &DVector<f64>, qd: &DVector<f64>| -> Result<(DVector<f64>, f64), DynamicsError> {
        let tau = torque(t, q, qd);
        let (qdd, _) = forward_dynamics_inner(model, q, qd, &tau, gravity, false)?;
        let power = qd.rows(0, n_a).dot(&tau);
        Ok((qdd, power))
    };
    let energy = |q: &DVector<f64>, qd: &DVector<f64>| -> Result<f64, DynamicsError> {
        Ok(kinetic_energy(model, q, qd)? + potential_energy(model, q, gravity)?)
    };

    let mut q = q0.clone();
    let mut qd = qd0.clone();
    let mut work = 0.0;
    let mut out = Rollout {
        t: vec![0.0],
        q: vec![q.clone()],
        qd: vec![qd.clone()],
        energy: vec![energy(&q, &qd)?],
        work: vec![0.0],
        max_closure_residual: 0.0,
    };
    for step in 0..steps {
        let t = step as f64 * dt;
        let (a1, p1) = deriv(t, &q, &qd)?;
        let (q2, v2) = (&q + &qd * (0.5 * dt), &qd + &a1 * (0.5 * dt));
        let (a2, p2) = deriv(t + 0.5 * dt, &q2, &v2)?;
        let (q3, v3) = (&q + &v2 * (0.5 * dt), &qd + &a2 * (0.5 * dt));
        let (a3, p3) = deriv(t + 0.5 * dt, &q3, &v3)?;
        let (q4, v4) = (&q + &v3 * dt, &qd + &a3 * dt);
        let (a4, p4) = deriv(t + dt, &q4, &v4)?;
        q += (&qd + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
        qd += (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (dt / 6.0);
        work += (p1 + 2.0 * p2 + 2.0 * p3 + p4) * (dt / 6.0);

        if has_closure {
            if settings.reproject {
                let seed = q.rows(n_a, n_p).into_owned();
                q = solve_closure(model, &q.rows(0, n_a).into_owned(), Some(&seed))?;
                let zero = DVector::zeros(n_a);
                qd = resolve_passive_rates(model, &q, &qd.rows(0, n_a).into_owned(), &zero)?.0;
            }
            let residual = inf_norm(&crate::kinematics::closure_residual(model, &q)?);
            out.max_closure_residual = out.max_closure_residual.max(residual);
        }
        if (step + 1) % settings.record_every.max(1) == 0 || step + 1 == steps {
            out.t.push((step + 1) as f64 * dt);
            out.q.push(q.clone());
            out.qd.push(qd.clone());
            out.energy.push(energy(&q, &qd)?);
            out.work.push(work);
        }
    }
    debug_assert_eq!(out.q[0].len(), n);
    Ok(out)
}
