//! Nominal predictor and stochastic simulator sharing one step function.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{settle_pose, wrap_angle, Command, SimParams, VehicleGeometry, VehicleState};
use crate::error::{Result, TntError};
use crate::terrain::ElevationMap;

/// Output of [`predict_rollout`]: one state per executed command.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub states: Vec<VehicleState>,
    /// Index of the command whose step would have left the map.
    pub exit_index: Option<usize>,
}

impl Rollout {
    pub fn is_complete(&self) -> bool {
        self.exit_index.is_none()
    }

    pub fn last(&self) -> Option<&VehicleState> {
        self.states.last()
    }
}

/// One step of unicycle motion with first-order actuation lag toward a
/// slope-reduced target velocity, then quasi-static re-settling.
fn advance(
    state: &VehicleState,
    cmd: Command,
    map: &ElevationMap,
    geom: &VehicleGeometry,
    params: &SimParams,
    stall: bool,
    noise: (f64, f64),
) -> Result<VehicleState> {
    let cmd = cmd.clamped(params);
    let heading_sign = if state.v != 0.0 {
        state.v.signum()
    } else {
        // signum(0.0) is 1.0; a vehicle at rest with no command sees no slope.
        if cmd.v == 0.0 {
            0.0
        } else {
            cmd.v.signum()
        }
    };
    let slope = state.pitch.tan() * heading_sign;
    let slip = (1.0 - params.slip_gain * slope.max(0.0)).max(0.0);
    let mut target_v = cmd.v * slip;
    if stall && slope > params.stuck_slope {
        target_v = 0.0;
    }
    let alpha = if params.actuation_tau > 0.0 {
        1.0 - (-params.dt / params.actuation_tau).exp()
    } else {
        1.0
    };
    let mut v = state.v + alpha * (target_v - state.v);
    let mut omega = state.omega + alpha * (cmd.omega - state.omega);
    if noise.0 != 0.0 {
        v += noise.0;
    }
    if noise.1 != 0.0 {
        omega += noise.1;
    }
    let (s, c) = state.yaw.sin_cos();
    let x = state.x + v * c * params.dt;
    let y = state.y + v * s * params.dt;
    let yaw = wrap_angle(state.yaw + omega * params.dt);
    let pose = settle_pose(map, x, y, yaw, geom)?;
    Ok(VehicleState {
        x,
        y,
        z: pose.z,
        roll: pose.roll,
        pitch: pose.pitch,
        yaw,
        v,
        omega,
    })
}

/// Deterministic multi-step prediction. A step that leaves the map truncates
/// the rollout and records its index.
pub fn predict_rollout(
    state: &VehicleState,
    commands: &[Command],
    map: &ElevationMap,
    geom: &VehicleGeometry,
    params: &SimParams,
) -> Result<Rollout> {
    if commands.is_empty() {
        return Err(TntError::spec("rollout needs at least one command"));
    }
    let mut states = Vec::with_capacity(commands.len());
    let mut cur = *state;
    for (i, &cmd) in commands.iter().enumerate() {
        match advance(&cur, cmd, map, geom, params, false, (0.0, 0.0)) {
            Ok(next) => {
                states.push(next);
                cur = next;
            }
            Err(TntError::Bounds { .. }) => {
                return Ok(Rollout {
                    states,
                    exit_index: Some(i),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Rollout {
        states,
        exit_index: None,
    })
}

/// Height variance of the footprint patch, sampling clamped at the map edge.
pub fn footprint_variance(map: &ElevationMap, x: f64, y: f64, yaw: f64, cells: usize) -> f64 {
    let (gx, gy) = map.world_to_grid(x, y);
    let mut buf = Vec::with_capacity(cells * cells);
    map.fill_patch(gx, gy, yaw, cells, &mut buf);
    let n = buf.len() as f64;
    let mean = buf.iter().sum::<f64>() / n;
    buf.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n
}

/// Ground-truth step: nominal dynamics plus roughness-scaled velocity noise
/// and stalling on slopes steeper than `params.stuck_slope`.
///
/// The only error is the vehicle leaving the map.
pub fn simulate_step<R: Rng + ?Sized>(
    state: &VehicleState,
    cmd: Command,
    map: &ElevationMap,
    geom: &VehicleGeometry,
    params: &SimParams,
    rng: &mut R,
) -> Result<VehicleState> {
    let sigma = if params.roughness_gain > 0.0 {
        params.roughness_gain * footprint_variance(map, state.x, state.y, state.yaw, params.footprint_cells)
    } else {
        0.0
    };
    let noise = if sigma > 0.0 {
        let zv: f64 = rng.sample(StandardNormal);
        let zw: f64 = rng.sample(StandardNormal);
        (sigma * zv, sigma * zw)
    } else {
        (0.0, 0.0)
    };
    advance(state, cmd, map, geom, params, true, noise)
}
