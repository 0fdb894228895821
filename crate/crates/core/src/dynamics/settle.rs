//! Quasi-static pose: least-squares plane through the four wheel contacts.

use super::VehicleGeometry;
use crate::error::{Result, TntError};
use crate::terrain::ElevationMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettledPose {
    pub z: f64,
    /// Positive when the left side is higher.
    pub roll: f64,
    /// Positive when the nose is higher.
    pub pitch: f64,
}

/// Settles the chassis at `(x, y, yaw)`.
///
/// The contact plane `h = a + b*forward + c*left` is fitted to the wheel
/// heights in the body frame; `z = a + clearance`, `pitch = atan(b)`,
/// `roll = atan(c)`.
pub fn settle_pose(map: &ElevationMap, x: f64, y: f64, yaw: f64, geom: &VehicleGeometry) -> Result<SettledPose> {
    let (s, c) = yaw.sin_cos();
    let mut h = [0.0; 4];
    for (i, [u, w]) in geom.wheels.iter().enumerate() {
        let wx = x + u * c - w * s;
        let wy = y + u * s + w * c;
        h[i] = map.height_at(wx, wy)?;
    }
    let (a, b, cc) = fit_plane(&geom.wheels, &h)?;
    Ok(SettledPose {
        z: a + geom.clearance,
        roll: cc.atan(),
        pitch: b.atan(),
    })
}

/// Least squares `h = a + b*u + c*w`.
pub(crate) fn fit_plane(points: &[[f64; 2]; 4], h: &[f64; 4]) -> Result<(f64, f64, f64)> {
    let mut m = [[0.0f64; 4]; 3];
    for (p, &hi) in points.iter().zip(h) {
        let row = [1.0, p[0], p[1]];
        for r in 0..3 {
            for col in 0..3 {
                m[r][col] += row[r] * row[col];
            }
            m[r][3] += row[r] * hi;
        }
    }
    // Gaussian elimination with partial pivoting on the 3x4 augmented matrix.
    for k in 0..3 {
        let piv = (k..3)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[piv][k].abs() < 1e-15 {
            return Err(TntError::spec("singular wheel layout"));
        }
        m.swap(k, piv);
        for i in 0..3 {
            if i != k {
                let f = m[i][k] / m[k][k];
                if f != 0.0 {
                    for col in k..4 {
                        m[i][col] -= f * m[k][col];
                    }
                }
            }
        }
    }
    Ok((m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]))
}
