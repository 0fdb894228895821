//! Pure-pursuit tracking of a grid path.

use super::astar::GridPath;
use crate::dynamics::{wrap_angle, Command, VehicleState};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerGains {
    /// Meters ahead of the vehicle to aim for.
    pub lookahead: f64,
    pub cruise: f64,
    pub omega_max: f64,
    /// Stop when the last waypoint is this close, meters.
    pub goal_tolerance: f64,
}

impl Default for TrackerGains {
    fn default() -> Self {
        Self {
            lookahead: 0.4,
            cruise: 0.5,
            omega_max: 1.5,
            goal_tolerance: 0.15,
        }
    }
}

/// Steers toward the first waypoint at least `lookahead` away, searching
/// forward from the waypoint nearest the vehicle. Speed scales with the
/// cosine of the heading error and drops to zero beyond 90°.
pub fn track_path(path: &GridPath, state: &VehicleState, gains: &TrackerGains) -> Command {
    let Some(last) = path.waypoints.last() else {
        return Command::ZERO;
    };
    if state.distance_to(*last) <= gains.goal_tolerance {
        return Command::ZERO;
    }
    let nearest = path
        .waypoints
        .iter()
        .enumerate()
        .min_by(|a, b| state.distance_to(*a.1).total_cmp(&state.distance_to(*b.1)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let target = path.waypoints[nearest..]
        .iter()
        .find(|w| state.distance_to(**w) >= gains.lookahead)
        .unwrap_or(last);
    let (dx, dy) = (target[0] - state.x, target[1] - state.y);
    let dist = (dx * dx + dy * dy).sqrt().max(1e-9);
    let alpha = wrap_angle(dy.atan2(dx) - state.yaw);
    let v = gains.cruise * alpha.cos().max(0.0);
    let omega = (2.0 * gains.cruise * alpha.sin() / dist).clamp(-gains.omega_max, gains.omega_max);
    Command::new(v, omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> GridPath {
        let waypoints: Vec<[f64; 2]> = (0..10).map(|i| [i as f64 * 0.2, 0.0]).collect();
        GridPath {
            cells: (0..10).map(|i| (i, 0)).collect(),
            cost: 9.0,
            waypoints,
        }
    }

    #[test]
    fn aligned_on_path_drives_straight() {
        let c = track_path(&straight(), &VehicleState::at(0.5, 0.0, 0.0), &TrackerGains::default());
        assert_eq!(c.omega, 0.0);
        assert_eq!(c.v, 0.5);
    }

    #[test]
    fn target_to_the_left_turns_left() {
        let c = track_path(&straight(), &VehicleState::at(0.0, -0.5, 0.0), &TrackerGains::default());
        assert!(c.omega > 0.0);
        let c = track_path(&straight(), &VehicleState::at(1.0, -1.0, 0.0), &TrackerGains::default());
        assert!(c.omega > 0.0);
    }

    #[test]
    fn stops_at_goal() {
        let c = track_path(&straight(), &VehicleState::at(1.75, 0.05, 0.3), &TrackerGains::default());
        assert_eq!(c, Command::ZERO);
    }
}
