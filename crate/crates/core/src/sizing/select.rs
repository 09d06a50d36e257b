use std::cmp::Ordering;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    joint_duties, motor_side_torque, trapezoidal_rms, ActuatorCatalog, FrictionParams, Gearbox, JointDuty,
    JointRequirements, Motor, SizingConfig, SizingError,
};
use crate::dynamics::{constrained_inverse_dynamics, pro_torque_profile, TorqueProfile};
use crate::kinematics::ClosureSolver;
use crate::math::Vec3;
use crate::model::{attach_actuator_masses, RigidBodyModel};
use crate::trajectory::TrajectorySamples;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    PeakTorque,
    RmsTorque,
    Speed,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::PeakTorque => "peak torque",
            Constraint::RmsTorque => "rms torque",
            Constraint::Speed => "speed",
        })
    }
}

/// Capacity over factored demand for each check; ≥ 1 passes. `None` when the
/// demand is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub torque_peak: Option<f64>,
    pub torque_rms: Option<f64>,
    pub speed: Option<f64>,
}

impl Margins {
    fn get(&self, c: Constraint) -> f64 {
        match c {
            Constraint::PeakTorque => self.torque_peak,
            Constraint::RmsTorque => self.torque_rms,
            Constraint::Speed => self.speed,
        }
        .unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCheck {
    pub margins: Margins,
    pub violated: Vec<Constraint>,
}

impl PairCheck {
    pub fn feasible(&self) -> bool {
        self.violated.is_empty()
    }
}

fn ratio(capacity: f64, demand: f64) -> Option<f64> {
    (demand > 0.0).then(|| capacity / demand)
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Check one motor/gearbox pair against a joint's duty.
pub fn evaluate_pair(duty: &JointDuty, motor: &Motor, gearbox: &Gearbox, config: &SizingConfig) -> PairCheck {
    let req = &duty.requirements;
    let (sf_t, sf_s) = (config.sf_torque, config.sf_speed);
    let n = gearbox.ratio;

    let (motor_peak, motor_rms) = if duty.has_samples() {
        let tm: Vec<f64> = (0..duty.t.len())
            .map(|k| motor_side_torque(duty.tau[k], duty.qd[k], duty.qdd[k], gearbox, motor, &duty.friction))
            .collect();
        (tm.iter().fold(0.0f64, |a, x| a.max(x.abs())), trapezoidal_rms(&duty.t, |k| tm[k]))
    } else {
        let scale = n * gearbox.efficiency;
        (req.peak_torque / scale, req.rms_torque / scale)
    };
    let speed_rpm = req.peak_speed_rpm * n;

    let peak_ok = sf_t * req.peak_torque <= gearbox.peak_output_torque && sf_t * motor_peak <= motor.peak_torque;
    let rms_ok = sf_t * req.rms_torque <= gearbox.rated_output_torque && sf_t * motor_rms <= motor.rated_torque;
    let speed_ok = sf_s * speed_rpm <= motor.rated_speed && sf_s * speed_rpm <= gearbox.max_input_speed;

    let margins = Margins {
        torque_peak: min_opt(
            ratio(gearbox.peak_output_torque, sf_t * req.peak_torque),
            ratio(motor.peak_torque, sf_t * motor_peak),
        ),
        torque_rms: min_opt(ratio(gearbox.rated_output_torque, sf_t * req.rms_torque), ratio(motor.rated_torque, sf_t * motor_rms)),
        speed: ratio(motor.rated_speed.min(gearbox.max_input_speed), sf_s * speed_rpm),
    };
    let violated = [(peak_ok, Constraint::PeakTorque), (rms_ok, Constraint::RmsTorque), (speed_ok, Constraint::Speed)]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, c)| c)
        .collect();
    PairCheck { margins, violated }
}

fn cost(m: &Motor, g: &Gearbox) -> [f64; 3] {
    [m.rated_power, m.mass + g.mass, g.ratio]
}

fn cheaper(a: &[f64; 3], b: &[f64; 3]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Less) => return true,
            Some(Ordering::Greater) => return false,
            _ => {}
        }
    }
    false
}

/// Cheapest feasible pair, or the constraint no pair could meet. The binding
/// constraint is the one whose best achievable margin is lowest.
fn best_pair(duty: &JointDuty, catalog: &ActuatorCatalog, config: &SizingConfig) -> Result<(usize, usize, PairCheck), Constraint> {
    let mut best: Option<(usize, usize, PairCheck, [f64; 3])> = None;
    let mut best_margin = [f64::NEG_INFINITY; 3];
    let all = [Constraint::PeakTorque, Constraint::RmsTorque, Constraint::Speed];
    for (mi, m) in catalog.motors.iter().enumerate() {
        for (gi, g) in catalog.gearboxes.iter().enumerate() {
            let check = evaluate_pair(duty, m, g, config);
            for (slot, c) in best_margin.iter_mut().zip(all) {
                *slot = slot.max(check.margins.get(c));
            }
            if !check.feasible() {
                continue;
            }
            let key = cost(m, g);
            if best.as_ref().is_none_or(|b| cheaper(&key, &b.3)) {
                best = Some((mi, gi, check, key));
            }
        }
    }
    match best {
        Some((mi, gi, check, _)) => Ok((mi, gi, check)),
        None => {
            let worst = (0..3).min_by(|&a, &b| best_margin[a].total_cmp(&best_margin[b])).unwrap_or(0);
            Err(all[worst])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSelection {
    pub joint: String,
    pub motor: String,
    pub gearbox: String,
    pub ratio: f64,
    pub margins: Margins,
    /// Differs from the selection this round started from.
    pub changed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub round: u8,
    pub feasible: bool,
    pub joints: Vec<JointSelection>,
}

impl Selection {
    pub fn pair_names(&self) -> Vec<(String, String)> {
        self.joints.iter().map(|j| (j.motor.clone(), j.gearbox.clone())).collect()
    }

    /// Motor plus gearbox mass per joint.
    pub fn actuator_masses(&self, catalog: &ActuatorCatalog) -> Result<Vec<f64>, SizingError> {
        self.joints
            .iter()
            .map(|j| {
                let m = catalog.motor(&j.motor).ok_or_else(|| unknown("motor", &j.motor))?;
                let g = catalog.gearbox(&j.gearbox).ok_or_else(|| unknown("gearbox", &j.gearbox))?;
                Ok(m.mass + g.mass)
            })
            .collect()
    }
}

fn unknown(kind: &str, name: &str) -> SizingError {
    SizingError::Catalog { location: kind.into(), message: format!("selection refers to unknown part {name}") }
}

fn joint_label(j: usize) -> String {
    format!("J{}", j + 1)
}

fn joint_selection(j: usize, catalog: &ActuatorCatalog, mi: usize, gi: usize, check: PairCheck, changed: bool) -> JointSelection {
    JointSelection {
        joint: joint_label(j),
        motor: catalog.motors[mi].name.clone(),
        gearbox: catalog.gearboxes[gi].name.clone(),
        ratio: catalog.gearboxes[gi].ratio,
        margins: check.margins,
        changed,
    }
}

/// Cheapest feasible pair per joint.
pub fn select_round1(duties: &[JointDuty], catalog: &ActuatorCatalog, config: &SizingConfig) -> Result<Selection, SizingError> {
    config.validate()?;
    catalog.validate()?;
    let joints = duties
        .iter()
        .enumerate()
        .map(|(j, duty)| {
            let (mi, gi, check) = best_pair(duty, catalog, config).map_err(|binding| SizingError::Infeasible { joint: j, binding })?;
            Ok(joint_selection(j, catalog, mi, gi, check, false))
        })
        .collect::<Result<_, SizingError>>()?;
    Ok(Selection { round: 1, feasible: true, joints })
}

/// Change in static joint torque when actuator masses are mounted, at one
/// configuration. Only used to decide the order of round-2 re-checks.
pub fn static_increment_estimate(model: &RigidBodyModel, masses: &[f64], q: &DVector<f64>, gravity: &Vec3) -> Result<Vec<f64>, SizingError> {
    let loaded = attach_actuator_masses(model, masses)?;
    let zero = DVector::zeros(model.n_actuated());
    let before = constrained_inverse_dynamics(model, q, &zero, &zero, gravity)?;
    let after = constrained_inverse_dynamics(&loaded, q, &zero, &zero, gravity)?;
    Ok((after.tau_a - before.tau_a).iter().map(|d| d.abs()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round2Outcome {
    pub selection: Selection,
    /// Requirements of the final mass-loaded re-simulation.
    pub requirements: Vec<JointRequirements>,
    pub profile: TorqueProfile,
    pub iterations: usize,
}

/// Mount the selected actuators, re-simulate the closed chain and re-select
/// any joint that no longer passes, until nothing changes.
#[allow(clippy::too_many_arguments)]
pub fn validate_round2(
    round1: &Selection,
    model: &RigidBodyModel,
    trajectory: &TrajectorySamples,
    catalog: &ActuatorCatalog,
    config: &SizingConfig,
    gravity: &Vec3,
    friction: &[FrictionParams],
    rotor_reflection: &[f64],
) -> Result<Round2Outcome, SizingError> {
    config.validate()?;
    if round1.joints.len() != model.n_actuated() {
        return Err(SizingError::Mismatch(format!("selection has {} joints, model {}", round1.joints.len(), model.n_actuated())));
    }
    let mut current: Vec<(usize, usize)> = round1
        .joints
        .iter()
        .map(|j| {
            let mi = catalog.motors.iter().position(|m| m.name == j.motor).ok_or_else(|| unknown("motor", &j.motor))?;
            let gi = catalog.gearboxes.iter().position(|g| g.name == j.gearbox).ok_or_else(|| unknown("gearbox", &j.gearbox))?;
            Ok((mi, gi))
        })
        .collect::<Result<_, SizingError>>()?;
    let q0 = ClosureSolver::default().solve(model, &trajectory.q_a.row(0).transpose(), None).map_err(crate::dynamics::DynamicsError::from)?;

    for iteration in 1..=config.max_round2_iterations {
        let masses: Vec<f64> = current.iter().map(|&(mi, gi)| catalog.motors[mi].mass + catalog.gearboxes[gi].mass).collect();
        let loaded = attach_actuator_masses(model, &masses)?;
        let (profile, _) = pro_torque_profile(&loaded, trajectory, gravity)?;
        let duties = joint_duties(&profile, trajectory, friction, rotor_reflection)?;

        let estimate = static_increment_estimate(model, &masses, &q0, gravity)?;
        let mut order: Vec<usize> = (0..current.len()).collect();
        order.sort_by(|&a, &b| estimate[b].total_cmp(&estimate[a]).then(a.cmp(&b)));

        let mut changed = false;
        let mut checks = vec![None; current.len()];
        for j in order {
            let (mi, gi) = current[j];
            let check = evaluate_pair(&duties[j], &catalog.motors[mi], &catalog.gearboxes[gi], config);
            if check.feasible() {
                checks[j] = Some(check);
                continue;
            }
            let (nmi, ngi, ncheck) =
                best_pair(&duties[j], catalog, config).map_err(|binding| SizingError::Infeasible { joint: j, binding })?;
            current[j] = (nmi, ngi);
            checks[j] = Some(ncheck);
            changed = true;
        }

        if !changed {
            let joints = current
                .iter()
                .zip(checks)
                .enumerate()
                .map(|(j, (&(mi, gi), check))| {
                    let was = &round1.joints[j];
                    let differs = was.motor != catalog.motors[mi].name || was.gearbox != catalog.gearboxes[gi].name;
                    joint_selection(j, catalog, mi, gi, check.expect("every joint checked"), differs)
                })
                .collect();
            return Ok(Round2Outcome {
                selection: Selection { round: 2, feasible: true, joints },
                requirements: duties.into_iter().map(|d| d.requirements).collect(),
                profile,
                iterations: iteration,
            });
        }
    }
    Err(SizingError::NoFixedPoint { iterations: config.max_round2_iterations })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingReport {
    pub config: SizingConfig,
    pub requirements_round1: Vec<JointRequirements>,
    pub round1: Selection,
    pub requirements_round2: Vec<JointRequirements>,
    pub round2: Selection,
    pub round2_iterations: usize,
}

impl SizingReport {
    /// Both rounds from a PRO profile of the unloaded model.
    #[allow(clippy::too_many_arguments)]
    pub fn compute(
        model: &RigidBodyModel,
        trajectory: &TrajectorySamples,
        pro: &TorqueProfile,
        catalog: &ActuatorCatalog,
        config: &SizingConfig,
        gravity: &Vec3,
        friction: &[FrictionParams],
        rotor_reflection: &[f64],
    ) -> Result<(Self, Round2Outcome), SizingError> {
        let duties = joint_duties(pro, trajectory, friction, rotor_reflection)?;
        let round1 = select_round1(&duties, catalog, config)?;
        let outcome = validate_round2(&round1, model, trajectory, catalog, config, gravity, friction, rotor_reflection)?;
        let report = SizingReport {
            config: *config,
            requirements_round1: duties.iter().map(|d| d.requirements).collect(),
            round1,
            requirements_round2: outcome.requirements.clone(),
            round2: outcome.selection.clone(),
            round2_iterations: outcome.iterations,
        };
        Ok((report, outcome))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SizingError> {
        serde_json::from_str(text).map_err(|e| SizingError::Catalog { location: "sizing report".into(), message: e.to_string() })
    }
}
