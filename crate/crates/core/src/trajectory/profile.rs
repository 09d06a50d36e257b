use serde::{Deserialize, Serialize};

use super::TrajectoryError;

/// Bang-cruise-bang scalar profile from rest to rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidProfile {
    pub distance: f64,
    /// Velocity actually reached (below the limit for triangular profiles).
    pub peak_velocity: f64,
    pub acceleration: f64,
    pub t_accel: f64,
    pub t_cruise: f64,
    pub duration: f64,
}

/// Minimum-time trapezoidal profile covering `distance`.
pub fn trapezoid_profile(distance: f64, vmax: f64, amax: f64) -> Result<TrapezoidProfile, TrajectoryError> {
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(TrajectoryError::NegativeDistance(distance));
    }
    if !(vmax > 0.0) || !(amax > 0.0) {
        return Err(TrajectoryError::NonPositiveLimit);
    }
    if distance == 0.0 {
        return Ok(TrapezoidProfile {
            distance,
            peak_velocity: 0.0,
            acceleration: amax,
            t_accel: 0.0,
            t_cruise: 0.0,
            duration: 0.0,
        });
    }
    let (t_accel, t_cruise, peak) = if distance < vmax * vmax / amax {
        let t = (distance / amax).sqrt();
        (t, 0.0, amax * t)
    } else {
        (vmax / amax, (distance - vmax * vmax / amax) / vmax, vmax)
    };
    Ok(TrapezoidProfile {
        distance,
        peak_velocity: peak,
        acceleration: amax,
        t_accel,
        t_cruise,
        duration: 2.0 * t_accel + t_cruise,
    })
}

impl TrapezoidProfile {
    /// (s, ṡ, s̈) at time `t`, clamped to the profile's time span.
    pub fn sample(&self, t: f64) -> (f64, f64, f64) {
        if self.duration == 0.0 || t <= 0.0 {
            return (0.0, 0.0, if self.duration > 0.0 && t == 0.0 { self.acceleration } else { 0.0 });
        }
        if t >= self.duration {
            return (self.distance, 0.0, 0.0);
        }
        let a = self.acceleration;
        let ta = self.t_accel;
        let t_dec = ta + self.t_cruise;
        if t < ta {
            (0.5 * a * t * t, a * t, a)
        } else if t < t_dec {
            let s_a = 0.5 * a * ta * ta;
            (s_a + self.peak_velocity * (t - ta), self.peak_velocity, 0.0)
        } else {
            let r = self.duration - t;
            (self.distance - 0.5 * a * r * r, a * r, -a)
        }
    }

    /// Path speed as a function of travelled distance.
    pub fn speed_at(&self, s: f64) -> f64 {
        if self.duration == 0.0 {
            return 0.0;
        }
        let s = s.clamp(0.0, self.distance);
        let a = self.acceleration;
        (2.0 * a * s).sqrt().min(self.peak_velocity).min((2.0 * a * (self.distance - s)).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn triangular_case() {
        let p = trapezoid_profile(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(p.duration, 2.0, epsilon = 1e-15);
        assert_relative_eq!(p.peak_velocity, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn trapezoid_case() {
        let p = trapezoid_profile(10.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(p.t_accel, 1.0);
        assert_relative_eq!(p.t_cruise, 9.0);
        assert_relative_eq!(p.duration, 11.0);
        assert_eq!(p.sample(11.0), (10.0, 0.0, 0.0));
        assert_relative_eq!(p.sample(5.5).0, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_and_negative_distance() {
        assert_eq!(trapezoid_profile(0.0, 1.0, 1.0).unwrap().duration, 0.0);
        assert!(matches!(trapezoid_profile(-1.0, 1.0, 1.0), Err(TrajectoryError::NegativeDistance(_))));
        assert!(trapezoid_profile(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn speed_at_matches_time_sampling() {
        let p = trapezoid_profile(3.0, 1.2, 2.0).unwrap();
        for i in 1..50 {
            let t = p.duration * i as f64 / 50.0;
            let (s, v, _) = p.sample(t);
            assert_relative_eq!(p.speed_at(s), v, epsilon = 1e-9);
        }
    }
}
