//! Small rigid-body math helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Rotation3, Translation3, Unit, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation of `angle` about the (unit) `axis`.
pub fn axis_rotation(axis: &Vec3, angle: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Unit::new_unchecked(*axis), angle)
}

pub fn isometry(translation: Vec3, rotation: UnitQuaternion<f64>) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::from(translation), rotation)
}

/// Rotation vector of `r` (inverse of the exponential map).
pub fn so3_log(r: &UnitQuaternion<f64>) -> Vec3 {
    r.scaled_axis()
}

/// Inverse right Jacobian of SO(3): maps body angular velocity to the rate of
/// the rotation vector.
pub fn so3_right_jacobian_inv(theta: &Vec3) -> Mat3 {
    let angle = theta.norm();
    let k = skew(theta);
    if angle < 1e-8 {
        return Mat3::identity() + 0.5 * k + (1.0 / 12.0) * k * k;
    }
    let coeff = 1.0 / (angle * angle) - (1.0 + angle.cos()) / (2.0 * angle * angle.sin());
    Mat3::identity() + 0.5 * k + coeff * k * k
}

/// Inertia of a point mass at `offset` about the origin.
pub fn point_inertia(mass: f64, offset: &Vec3) -> Mat3 {
    mass * (offset.norm_squared() * Mat3::identity() - offset * offset.transpose())
}

pub fn rotate_inertia(rotation: &Rotation3<f64>, inertia: &Mat3) -> Mat3 {
    let r = rotation.matrix();
    r * inertia * r.transpose()
}

/// Max-norm of a dense vector (0 for empty vectors).
pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn inf_norm_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// 2-norm condition number; `f64::INFINITY` for rank-deficient matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Dense LU solve with one step of iterative refinement.
pub fn solve_refined(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = a.clone().lu();
    let mut x = lu.solve(b)?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_jacobian_inverse_matches_finite_difference() {
        // d/dt log(R0 * exp(w t)) at t=0 equals Jr^-1(log R0) w
        let theta = Vec3::new(0.3, -0.5, 0.2);
        let r0 = UnitQuaternion::from_scaled_axis(theta);
        let w = Vec3::new(0.7, 0.1, -0.4);
        let h = 1e-6;
        let plus = so3_log(&(r0 * UnitQuaternion::from_scaled_axis(w * h)));
        let minus = so3_log(&(r0 * UnitQuaternion::from_scaled_axis(-w * h)));
        let fd = (plus - minus) / (2.0 * h);
        let an = so3_right_jacobian_inv(&theta) * w;
        assert!((fd - an).norm() < 1e-8, "{fd} vs {an}");
    }

    #[test]
    fn condition_of_singular_matrix_is_infinite_or_huge() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(condition_number(&m) > 1e12);
    }
}
