use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{MotionPrimitive, Program, TrajectoryError, TrajectorySamples};
use crate::table::{read_table, write_table, TableError};

impl From<TableError> for TrajectoryError {
    fn from(e: TableError) -> Self {
        TrajectoryError::Format(e.to_string())
    }
}

/// `t,q1..qn,qd1..qdn,qdd1..qddn`
pub fn trajectory_csv_header(n_a: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["q", "qd", "qdd"] {
        h.extend((1..=n_a).map(|j| format!("{prefix}{j}")));
    }
    h
}

pub fn write_trajectory_csv<W: Write>(samples: &TrajectorySamples, writer: W) -> Result<(), TrajectoryError> {
    let n = samples.n_joints();
    let rows = (0..samples.len()).map(|k| {
        let mut row = Vec::with_capacity(1 + 3 * n);
        row.push(samples.t[k]);
        for m in [&samples.q_a, &samples.qd_a, &samples.qdd_a] {
            row.extend(m.row(k).iter());
        }
        row
    });
    write_table(writer, &trajectory_csv_header(n), rows)?;
    Ok(())
}

/// Read a trajectory CSV. The period is taken from the first two rows;
/// primitive boundaries live in the sidecar manifest and are left empty.
pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<TrajectorySamples, TrajectoryError> {
    let (header, rows) = read_table(reader)?;
    if header.len() < 4 || (header.len() - 1) % 3 != 0 || header[0] != "t" {
        return Err(TrajectoryError::Format(format!("unexpected header {header:?}")));
    }
    let n = (header.len() - 1) / 3;
    if header != trajectory_csv_header(n) {
        return Err(TrajectoryError::Format(format!("unexpected header {header:?}")));
    }
    if rows.is_empty() {
        return Err(TrajectoryError::Format("no samples".into()));
    }
    let k = rows.len();
    let block = |offset: usize| DMatrix::from_fn(k, n, |i, j| rows[i][offset + j]);
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let dt = if k > 1 { t[1] - t[0] } else { super::DEFAULT_DT };
    if !(dt > 0.0) {
        return Err(TrajectoryError::InvalidDt(dt));
    }
    Ok(TrajectorySamples { dt, t, q_a: block(1), qd_a: block(1 + n), qdd_a: block(1 + 2 * n), primitive_boundaries: vec![] })
}

/// Sidecar describing how a trajectory file was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub dt: f64,
    pub samples: usize,
    pub duration: f64,
    pub start_q: Vec<f64>,
    pub primitives: Vec<MotionPrimitive>,
    pub primitive_boundaries: Vec<usize>,
}

impl TrajectoryManifest {
    pub fn new(program: &Program, samples: &TrajectorySamples) -> Self {
        Self {
            dt: samples.dt,
            samples: samples.len(),
            duration: samples.duration(),
            start_q: program.start_q.clone(),
            primitives: program.primitives.clone(),
            primitive_boundaries: samples.primitive_boundaries.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
