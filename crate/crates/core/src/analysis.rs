//! Agreement metrics between DEMO and PRO torque traces.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::TorqueProfile;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("profiles differ: {0}")]
    Mismatch(String),
    #[error("{0} profile has no motor-side torques")]
    NoMotorSide(&'static str),
    #[error("metrics file: {0}")]
    Format(String),
}

/// Which side of the drive train the traces were taken on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorqueBasis {
    #[default]
    JointSide,
    MotorSide,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointMetrics {
    pub joint: String,
    /// `None` when either trace is flat.
    pub correlation: Option<f64>,
    pub rmse: f64,
    /// mean(demo − pro)
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub basis: TorqueBasis,
    pub joints: Vec<JointMetrics>,
}

fn is_flat(x: &[f64], mean: f64) -> bool {
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    x.iter().all(|v| (v - mean).abs() <= 1e-12 * scale)
}

/// Population statistics of `demo − pro` plus Pearson correlation.
pub fn compare_traces(joint: &str, demo: &[f64], pro: &[f64]) -> Result<JointMetrics, AnalysisError> {
    if demo.len() != pro.len() || demo.is_empty() {
        return Err(AnalysisError::Mismatch(format!("trace lengths {} and {}", demo.len(), pro.len())));
    }
    let n = demo.len() as f64;
    let md = demo.iter().sum::<f64>() / n;
    let mp = pro.iter().sum::<f64>() / n;
    let (mut sdd, mut spp, mut sdp, mut se, mut se2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (d, p) in demo.iter().zip(pro) {
        let (a, b) = (d - md, p - mp);
        sdd += a * a;
        spp += b * b;
        sdp += a * b;
        let e = d - p;
        se += e;
        se2 += e * e;
    }
    let correlation = if is_flat(demo, md) || is_flat(pro, mp) { None } else { Some((sdp / (sdd * spp).sqrt()).clamp(-1.0, 1.0)) };
    Ok(JointMetrics { joint: joint.to_string(), correlation, rmse: (se2 / n).sqrt(), bias: se / n })
}

fn compare_matrices(demo: &DMatrix<f64>, pro: &DMatrix<f64>, basis: TorqueBasis) -> Result<ComparisonMetrics, AnalysisError> {
    if demo.shape() != pro.shape() {
        return Err(AnalysisError::Mismatch(format!("shapes {:?} and {:?}", demo.shape(), pro.shape())));
    }
    let joints = (0..demo.ncols())
        .map(|j| {
            let d: Vec<f64> = demo.column(j).iter().copied().collect();
            let p: Vec<f64> = pro.column(j).iter().copied().collect();
            compare_traces(&format!("J{}", j + 1), &d, &p)
        })
        .collect::<Result<_, _>>()?;
    Ok(ComparisonMetrics { basis, joints })
}

fn check_grid(demo: &TorqueProfile, pro: &TorqueProfile) -> Result<(), AnalysisError> {
    if demo.t.len() != pro.t.len() || demo.t.iter().zip(&pro.t).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(AnalysisError::Mismatch("time grids differ".into()));
    }
    Ok(())
}

/// Joint-side comparison.
pub fn compare_profiles(demo: &TorqueProfile, pro: &TorqueProfile) -> Result<ComparisonMetrics, AnalysisError> {
    check_grid(demo, pro)?;
    compare_matrices(&demo.tau, &pro.tau, TorqueBasis::JointSide)
}

/// Comparison of the motor-side traces; both profiles must carry them.
pub fn compare_motor_side(demo: &TorqueProfile, pro: &TorqueProfile) -> Result<ComparisonMetrics, AnalysisError> {
    check_grid(demo, pro)?;
    let d = demo.motor_side.as_ref().ok_or(AnalysisError::NoMotorSide("demo"))?;
    let p = pro.motor_side.as_ref().ok_or(AnalysisError::NoMotorSide("pro"))?;
    compare_matrices(d, p, TorqueBasis::MotorSide)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateThresholds {
    pub min_correlation: f64,
    /// N·m
    pub max_rmse: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self { min_correlation: 0.99, max_rmse: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointVerdict {
    pub joint: String,
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// A joint passes when its correlation and rmse are both within bounds. Flat
/// traces have no correlation and are judged on rmse alone.
pub fn agreement_gate(metrics: &ComparisonMetrics, thresholds: &GateThresholds) -> Vec<JointVerdict> {
    metrics
        .joints
        .iter()
        .map(|m| {
            let mut reasons = Vec::new();
            if let Some(c) = m.correlation {
                if c < thresholds.min_correlation {
                    reasons.push(format!("correlation {c:.4} below {}", thresholds.min_correlation));
                }
            }
            if !(m.rmse <= thresholds.max_rmse) {
                reasons.push(format!("rmse {:.4} N·m above {}", m.rmse, thresholds.max_rmse));
            }
            JointVerdict { joint: m.joint.clone(), pass: reasons.is_empty(), reasons }
        })
        .collect()
}

pub const METRICS_HEADER: [&str; 4] = ["joint", "correlation", "rmse_Nm", "bias_Nm"];
const UNDEFINED: &str = "undefined";

pub fn write_metrics_csv<W: Write>(metrics: &ComparisonMetrics, writer: W) -> Result<(), AnalysisError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let wrap = |e: csv::Error| AnalysisError::Format(e.to_string());
    w.write_record(METRICS_HEADER).map_err(wrap)?;
    for m in &metrics.joints {
        let corr = m.correlation.map_or(UNDEFINED.to_string(), |c| c.to_string());
        w.write_record([m.joint.clone(), corr, m.rmse.to_string(), m.bias.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| AnalysisError::Format(e.to_string()))
}

pub fn read_metrics_csv<R: Read>(reader: R, basis: TorqueBasis) -> Result<ComparisonMetrics, AnalysisError> {
    let mut r = csv::Reader::from_reader(reader);
    let wrap = |e: csv::Error| AnalysisError::Format(e.to_string());
    if r.headers().map_err(wrap)?.iter().ne(METRICS_HEADER) {
        return Err(AnalysisError::Format("unexpected header".into()));
    }
    let num = |s: &str, line: usize| s.parse::<f64>().map_err(|_| AnalysisError::Format(format!("line {line}: bad number {s:?}")));
    let mut joints = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(wrap)?;
        let line = i + 2;
        let corr = match &rec[1] {
            UNDEFINED => None,
            s => Some(num(s, line)?),
        };
        joints.push(JointMetrics { joint: rec[0].to_string(), correlation: corr, rmse: num(&rec[2], line)?, bias: num(&rec[3], line)? });
    }
    Ok(ComparisonMetrics { basis, joints })
}

/// Time-aligned DEMO, PRO and absolute-error columns for plotting:
/// `t,demo1..n,pro1..n,abs_err1..n`.
pub fn write_plot_csv<W: Write>(demo: &TorqueProfile, pro: &TorqueProfile, writer: W) -> Result<(), AnalysisError> {
    check_grid(demo, pro)?;
    if demo.tau.shape() != pro.tau.shape() {
        return Err(AnalysisError::Mismatch("joint counts differ".into()));
    }
    let n = demo.n_joints();
    let mut header = vec!["t".to_string()];
    for prefix in ["demo", "pro", "abs_err"] {
        header.extend((1..=n).map(|j| format!("{prefix}{j}")));
    }
    let rows = (0..demo.len()).map(|k| {
        let mut row = vec![demo.t[k]];
        row.extend(demo.tau.row(k).iter());
        row.extend(pro.tau.row(k).iter());
        row.extend((0..n).map(|j| (demo.tau[(k, j)] - pro.tau[(k, j)]).abs()));
        row
    });
    crate::table::write_table(writer, &header, rows).map_err(|e| AnalysisError::Format(e.to_string()))
}
