//! Per-patch traversability channels and their weighted combination.

use ndarray::Array2;

use crate::dynamics::VehicleGeometry;
use crate::error::{Result, TntError};
use crate::learn::Regressor;
use crate::stability::roll_pitch;
use crate::terrain::TerrainPatch;

pub const CHANNELS: usize = 14;

/// Channel names in storage order.
pub const CHANNEL_NAMES: [&str; CHANNELS] = [
    "roll",
    "pitch",
    "mu_dv",
    "mu_domega",
    "sigma_dv",
    "sigma_domega",
    "mu_dx",
    "mu_dy",
    "mu_droll",
    "mu_dpitch",
    "sigma_dx",
    "sigma_dy",
    "sigma_droll",
    "sigma_dpitch",
];

/// Channels holding signed means; they enter the combination as magnitudes.
pub const MEAN_CHANNELS: [usize; 6] = [2, 3, 6, 7, 8, 9];
/// Channels holding standard deviations.
pub const SIGMA_CHANNELS: [usize; 6] = [4, 5, 10, 11, 12, 13];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelVector(pub [f64; CHANNELS]);

impl ChannelVector {
    pub fn roll(&self) -> f64 {
        self.0[0]
    }

    pub fn pitch(&self) -> f64 {
        self.0[1]
    }
}

/// Weights of the traversability value, laid out like the channels:
/// `w1` over (roll, pitch), `w2` over (μΔv, μΔω, σΔv, σΔω) and `w3` over
/// (μΔx, μΔy, μΔroll, μΔpitch, σΔx, σΔy, σΔroll, σΔpitch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombineWeights {
    pub w1: [f64; 2],
    pub w2: [f64; 4],
    pub w3: [f64; 8],
}

impl Default for CombineWeights {
    fn default() -> Self {
        Self {
            w1: [1.0, 1.0],
            w2: [0.5, 1.0, 0.5, 1.0],
            w3: [0.25; 8],
        }
    }
}

impl CombineWeights {
    pub fn from_array(a: [f64; CHANNELS]) -> Self {
        let mut w = Self {
            w1: [0.0; 2],
            w2: [0.0; 4],
            w3: [0.0; 8],
        };
        w.w1.copy_from_slice(&a[0..2]);
        w.w2.copy_from_slice(&a[2..6]);
        w.w3.copy_from_slice(&a[6..14]);
        w
    }

    pub fn as_array(&self) -> [f64; CHANNELS] {
        let mut a = [0.0; CHANNELS];
        a[0..2].copy_from_slice(&self.w1);
        a[2..6].copy_from_slice(&self.w2);
        a[6..14].copy_from_slice(&self.w3);
        a
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.as_array();
        if a.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(TntError::spec("combination weights must be finite and non-negative"));
        }
        if a.iter().all(|&w| w == 0.0) {
            return Err(TntError::spec("at least one combination weight must be positive"));
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::from_array(self.as_array().map(|w| w * alpha))
    }

    /// Divides each learned channel weight by the spread of the matching
    /// regressor target, so the channels contribute on a common scale.
    /// Roll and pitch weights are left in rad⁻¹.
    pub fn normalized_by(&self, vel: &Regressor, pose: &Regressor) -> Result<Self> {
        if vel.k() != 2 || pose.k() != 4 {
            return Err(TntError::spec("expected a 2-target velocity and a 4-target pose regressor"));
        }
        let mut a = self.as_array();
        let vs = vel.target_scale();
        let ps = pose.target_scale();
        for c in 0..2 {
            a[2 + c] /= vs[c];
            a[4 + c] /= vs[c];
        }
        for c in 0..4 {
            a[6 + c] /= ps[c];
            a[10 + c] /= ps[c];
        }
        let w = Self::from_array(a);
        w.validate()?;
        Ok(w)
    }
}

/// Traversability value of one channel vector: higher is harder.
pub fn combine(ch: &ChannelVector, w: &CombineWeights) -> f64 {
    combine_slice(&ch.0, &w.as_array())
}

pub(crate) fn combine_slice(ch: &[f64], w: &[f64; CHANNELS]) -> f64 {
    let mut v = 0.0;
    for c in 0..CHANNELS {
        let x = if MEAN_CHANNELS.contains(&c) { ch[c].abs() } else { ch[c] };
        v += w[c] * x;
    }
    v
}

fn check_regressors(vel: &Regressor, pose: &Regressor, patch_len: usize) -> Result<()> {
    if vel.k() != 2 || pose.k() != 4 {
        return Err(TntError::spec("expected a 2-target velocity and a 4-target pose regressor"));
    }
    if vel.arch().input != patch_len || pose.arch().input != patch_len {
        return Err(TntError::spec("regressor input size does not match the patch"));
    }
    Ok(())
}

pub fn patch_channels(
    patch: &TerrainPatch,
    geom: &VehicleGeometry,
    vel: &Regressor,
    pose: &Regressor,
) -> Result<ChannelVector> {
    check_regressors(vel, pose, patch.cells().len())?;
    let rp = roll_pitch(patch, geom)?;
    let dv = vel.forward(patch)?;
    let dq = pose.forward(patch)?;
    let mut c = [0.0; CHANNELS];
    c[0] = rp.roll;
    c[1] = rp.pitch;
    c[2..4].copy_from_slice(&dv.mu);
    c[4..6].copy_from_slice(&dv.sigma);
    c[6..10].copy_from_slice(&dq.mu);
    c[10..14].copy_from_slice(&dq.sigma);
    Ok(ChannelVector(c))
}

/// Channel rows for a batch of patches, one row per patch.
pub(crate) fn batch_channels(
    patches: &[TerrainPatch],
    geom: &VehicleGeometry,
    vel: &Regressor,
    pose: &Regressor,
) -> Result<Array2<f64>> {
    let n = patches.len();
    let len = patches.first().map_or(0, |p| p.cells().len());
    check_regressors(vel, pose, len)?;
    let mut x = Array2::zeros((n, len));
    for (mut row, p) in x.rows_mut().into_iter().zip(patches) {
        row.iter_mut().zip(p.cells()).for_each(|(d, &h)| *d = h);
    }
    let (mv, sv) = vel.predict_batch(x.clone())?;
    let (mq, sq) = pose.predict_batch(x)?;
    let mut out = Array2::zeros((n, CHANNELS));
    for (i, p) in patches.iter().enumerate() {
        let rp = roll_pitch(p, geom)?;
        out[[i, 0]] = rp.roll;
        out[[i, 1]] = rp.pitch;
        for c in 0..2 {
            out[[i, 2 + c]] = mv[[i, c]];
            out[[i, 4 + c]] = sv[[i, c]];
        }
        for c in 0..4 {
            out[[i, 6 + c]] = mq[[i, c]];
            out[[i, 10 + c]] = sq[[i, c]];
        }
    }
    Ok(out)
}
