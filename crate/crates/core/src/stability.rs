//! Footprint roll/pitch amplitudes from the four wheel heights.
//!
//! With wheels ordered front-left (1), rear-left (2), rear-right (3),
//! front-right (4):
//!
//! ```text
//! roll  = 0.5 * |atan((h1 - h4) / d14) + atan((h2 - h3) / d23)|
//! pitch = 0.5 * |atan((h1 - h2) / d12) + atan((h4 - h3) / d43)|
//! ```

use crate::dynamics::{VehicleGeometry, FRONT_LEFT, FRONT_RIGHT, REAR_LEFT, REAR_RIGHT};
use crate::error::{Result, TntError};
use crate::terrain::TerrainPatch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollPitchEstimate {
    /// Radians, non-negative.
    pub roll: f64,
    /// Radians, non-negative.
    pub pitch: f64,
}

/// Bilinear patch heights under the four wheels, in wheel order.
pub fn wheel_heights(patch: &TerrainPatch, geom: &VehicleGeometry) -> Result<[f64; 4]> {
    let mut h = [0.0; 4];
    for (i, [u, w]) in geom.wheels.iter().enumerate() {
        h[i] = patch.sample_local(*u, *w).ok_or_else(|| {
            TntError::spec(format!(
                "wheel {i} at ({u}, {w}) m lies outside the {0}x{0} patch",
                patch.size()
            ))
        })?;
    }
    Ok(h)
}

pub fn roll_pitch(patch: &TerrainPatch, geom: &VehicleGeometry) -> Result<RollPitchEstimate> {
    let h = wheel_heights(patch, geom)?;
    Ok(roll_pitch_from_heights(&h, geom))
}

pub fn roll_pitch_from_heights(h: &[f64; 4], geom: &VehicleGeometry) -> RollPitchEstimate {
    let pair = |i: usize, j: usize| ((h[i] - h[j]) / geom.distance(i, j)).atan();
    let roll = 0.5 * (pair(FRONT_LEFT, FRONT_RIGHT) + pair(REAR_LEFT, REAR_RIGHT)).abs();
    let pitch = 0.5 * (pair(FRONT_LEFT, REAR_LEFT) + pair(FRONT_RIGHT, REAR_RIGHT)).abs();
    RollPitchEstimate { roll, pitch }
}
