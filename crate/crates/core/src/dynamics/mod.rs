//! Vehicle model: quasi-static pose settling, the nominal kinodynamic
//! predictor, the stochastic ground-truth simulator and dataset collection.

mod dataset;
mod settle;
mod step;

pub use dataset::{
    collect_dataset, read_dataset, write_dataset, CollectStats, Dataset, ExplorationPolicy, RecordKind,
    TNTD_MAGIC, TNTD_VERSION,
};
pub use settle::{settle_pose, SettledPose};
pub use step::{footprint_variance, predict_rollout, simulate_step, Rollout};

use std::f64::consts::PI;

use crate::error::{Result, TntError};

/// Wheel indices into [`VehicleGeometry::wheels`].
pub const FRONT_LEFT: usize = 0;
pub const REAR_LEFT: usize = 1;
pub const REAR_RIGHT: usize = 2;
pub const FRONT_RIGHT: usize = 3;

/// Four-wheeled chassis. Wheel offsets are body frame `(forward, left)` in
/// meters, ordered front-left, rear-left, rear-right, front-right.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleGeometry {
    pub wheelbase: f64,
    pub track: f64,
    pub wheels: [[f64; 2]; 4],
    pub clearance: f64,
}

impl Default for VehicleGeometry {
    /// A 1/10-scale rock crawler.
    fn default() -> Self {
        Self::rectangular(0.31, 0.24, 0.1)
    }
}

impl VehicleGeometry {
    pub fn rectangular(wheelbase: f64, track: f64, clearance: f64) -> Self {
        let (l, t) = (wheelbase / 2.0, track / 2.0);
        Self {
            wheelbase,
            track,
            wheels: [[l, t], [-l, t], [-l, -t], [l, -t]],
            clearance,
        }
    }

    /// Distance between wheels `i` and `j` (zero-based).
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [a, b] = self.wheels[i];
        let [c, d] = self.wheels[j];
        ((a - c).powi(2) + (b - d).powi(2)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0) || !(self.track > 0.0) {
            return Err(TntError::spec("wheelbase and track must be positive"));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if !(self.distance(i, j) > 0.0) {
                    return Err(TntError::spec(format!("wheels {i} and {j} coincide")));
                }
            }
        }
        // The plane fit needs non-collinear contacts.
        let [p, q, r] = [self.wheels[0], self.wheels[1], self.wheels[2]];
        let cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
        if cross.abs() < 1e-12 {
            return Err(TntError::spec("wheel contacts are collinear"));
        }
        if !self.clearance.is_finite() {
            return Err(TntError::spec("clearance must be finite"));
        }
        Ok(())
    }

    /// Half extent (meters) of the axis-aligned box around the wheels.
    pub fn reach(&self) -> f64 {
        self.wheels
            .iter()
            .map(|[u, w]| u.abs().max(w.abs()))
            .fold(0.0, f64::max)
    }
}

/// Planar pose, settled attitude and body velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub v: f64,
    pub omega: f64,
}

impl VehicleState {
    pub fn at(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
            ..Self::default()
        }
    }

    pub fn with_velocity(mut self, v: f64, omega: f64) -> Self {
        self.v = v;
        self.omega = omega;
        self
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        ((self.x - p[0]).powi(2) + (self.y - p[1]).powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z, self.roll, self.pitch, self.yaw, self.v, self.omega]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Commanded body velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    pub v: f64,
    pub omega: f64,
}

impl Command {
    pub const ZERO: Command = Command { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn clamped(self, params: &SimParams) -> Self {
        Self {
            v: self.v.clamp(-params.v_max, params.v_max),
            omega: self.omega.clamp(-params.omega_max, params.omega_max),
        }
    }
}

/// Simulator and nominal-model constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    /// Fractional velocity loss per unit of uphill along-heading slope.
    pub slip_gain: f64,
    /// Velocity noise standard deviation per m^2 of footprint height variance.
    pub roughness_gain: f64,
    /// First-order actuation time constant, seconds.
    pub actuation_tau: f64,
    /// Along-heading slope (rise over run) beyond which the vehicle stalls.
    pub stuck_slope: f64,
    /// Roll or pitch magnitude, radians, counted as a rollover.
    pub rollover: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Nominal prediction horizon in steps.
    pub horizon: usize,
    /// Side of the footprint patch used for the roughness estimate, in cells.
    pub footprint_cells: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            slip_gain: 1.0,
            roughness_gain: 40.0,
            actuation_tau: 0.2,
            stuck_slope: 0.45,
            rollover: 45f64.to_radians(),
            v_max: 1.0,
            omega_max: 1.5,
            horizon: 25,
            footprint_cells: 25,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(TntError::spec("dt must be positive"));
        }
        if self.slip_gain < 0.0 || self.roughness_gain < 0.0 || self.actuation_tau < 0.0 {
            return Err(TntError::spec("gains must be non-negative"));
        }
        if !(self.stuck_slope > 0.0) || !(self.rollover > 0.0) {
            return Err(TntError::spec("thresholds must be positive"));
        }
        if !(self.v_max > 0.0) || !(self.omega_max > 0.0) {
            return Err(TntError::spec("actuation limits must be positive"));
        }
        if self.horizon == 0 || self.footprint_cells < 2 {
            return Err(TntError::spec("horizon and footprint must be positive"));
        }
        Ok(())
    }

    /// The same dynamics without stochastic terms.
    pub fn noise_free(&self) -> Self {
        Self {
            roughness_gain: 0.0,
            ..self.clone()
        }
    }

    pub fn is_rollover(&self, s: &VehicleState) -> bool {
        s.roll.abs() > self.rollover || s.pitch.abs() > self.rollover
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        for a in [-10.0, -PI, -1.0, 0.0, 3.0, PI, 7.5, 100.0] {
            let w = wrap_angle(a);
            assert!((-PI..PI).contains(&w), "{a} -> {w}");
            assert!(((a - w) / (2.0 * PI) - ((a - w) / (2.0 * PI)).round()).abs() < 1e-9);
        }
        assert_eq!(wrap_angle(PI), -PI);
    }

    #[test]
    fn geometry_pairs() {
        let g = VehicleGeometry::default();
        g.validate().unwrap();
        assert!((g.distance(FRONT_LEFT, FRONT_RIGHT) - 0.24).abs() < 1e-12);
        assert!((g.distance(FRONT_LEFT, REAR_LEFT) - 0.31).abs() < 1e-12);
        assert!((g.distance(FRONT_RIGHT, REAR_RIGHT) - 0.31).abs() < 1e-12);
        let mut bad = g.clone();
        bad.wheels[1] = bad.wheels[0];
        assert!(bad.validate().is_err());
    }
}
