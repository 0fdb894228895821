//! Procedural terrain standing in for a reconfigurable rock testbed.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng as _;

use super::ElevationMap;
use crate::error::{Result, TntError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerrainKind {
    Flat,
    Ramp,
    Step,
    BoulderField,
}

impl FromStr for TerrainKind {
    type Err = TntError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Self::Flat),
            "ramp" => Ok(Self::Ramp),
            "step" => Ok(Self::Step),
            "boulder_field" | "boulders" => Ok(Self::BoulderField),
            other => Err(TntError::spec(format!("unknown terrain kind '{other}'"))),
        }
    }
}

impl TerrainKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::Ramp => "ramp",
            Self::Step => "step",
            Self::BoulderField => "boulder_field",
        }
    }
}

/// Grid shape for generated maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDims {
    pub rows: usize,
    pub cols: usize,
    pub resolution: f64,
}

impl Default for MapDims {
    /// 4.0 m x 3.2 m at 2.5 cm.
    fn default() -> Self {
        Self {
            rows: 160,
            cols: 128,
            resolution: 0.025,
        }
    }
}

/// Parameters for [`generate_terrain`]. Ranges are inclusive `(lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainGenSpec {
    pub kind: TerrainKind,
    pub base: f64,
    pub max_height: f64,
    pub boulder_count: (usize, usize),
    pub boulder_radius: (f64, f64),
    pub boulder_height: (f64, f64),
    pub ramp_angle: (f64, f64),
    pub step_height: (f64, f64),
}

impl Default for TerrainGenSpec {
    fn default() -> Self {
        Self::boulder_field()
    }
}

impl TerrainGenSpec {
    pub fn flat() -> Self {
        Self {
            kind: TerrainKind::Flat,
            ..Self::boulder_field()
        }
    }

    pub fn boulder_field() -> Self {
        Self {
            kind: TerrainKind::BoulderField,
            base: 0.0,
            max_height: 0.6,
            boulder_count: (14, 22),
            boulder_radius: (0.12, 0.35),
            boulder_height: (0.03, 0.3),
            ramp_angle: (5f64.to_radians(), 20f64.to_radians()),
            step_height: (0.02, 0.12),
        }
    }

    pub fn with_kind(mut self, kind: TerrainKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn range(name: &str, lo: f64, hi: f64) -> Result<()> {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(TntError::spec(format!("degenerate {name} range ({lo}, {hi})")));
            }
            Ok(())
        }
        if !self.base.is_finite() {
            return Err(TntError::spec("base offset must be finite"));
        }
        if !(self.max_height >= 0.0 && self.max_height.is_finite()) {
            return Err(TntError::spec(format!("max height must be >= 0, got {}", self.max_height)));
        }
        if self.boulder_count.0 > self.boulder_count.1 {
            return Err(TntError::spec("degenerate boulder count range"));
        }
        range("boulder radius", self.boulder_radius.0, self.boulder_radius.1)?;
        if self.boulder_radius.0 <= 0.0 {
            return Err(TntError::spec("boulder radius must be positive"));
        }
        range("boulder height", self.boulder_height.0, self.boulder_height.1)?;
        range("ramp angle", self.ramp_angle.0, self.ramp_angle.1)?;
        if self.ramp_angle.0 < 0.0 || self.ramp_angle.1 >= PI / 2.0 {
            return Err(TntError::spec("ramp angle must lie in [0, pi/2)"));
        }
        range("step height", self.step_height.0, self.step_height.1)?;
        Ok(())
    }
}

fn uniform(rng: &mut seed::Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Deterministic terrain for `(spec, seed, dims)`. Heights stay within
/// `[base, base + max_height]`.
pub fn generate_terrain(spec: &TerrainGenSpec, seed: u64, dims: MapDims) -> Result<ElevationMap> {
    spec.validate()?;
    if dims.rows < 2 || dims.cols < 2 || !(dims.resolution > 0.0) {
        return Err(TntError::spec(format!(
            "invalid map dims {}x{} @ {}",
            dims.rows, dims.cols, dims.resolution
        )));
    }
    let mut rng = seed::rng(seed);
    let res = dims.resolution;
    let ext_x = (dims.rows - 1) as f64 * res;
    let ext_y = (dims.cols - 1) as f64 * res;
    let top = spec.max_height;

    // Relief above base, clamped to [0, max_height].
    let relief: Box<dyn Fn(f64, f64) -> f64> = match spec.kind {
        TerrainKind::Flat => Box::new(|_, _| 0.0),
        TerrainKind::Ramp => {
            let slope = uniform(&mut rng, spec.ramp_angle).tan();
            let dir = rng.gen_range(-PI..PI);
            let (s, c) = dir.sin_cos();
            let (cx, cy) = (ext_x / 2.0, ext_y / 2.0);
            Box::new(move |x, y| slope * ((x - cx) * c + (y - cy) * s))
        }
        TerrainKind::Step => {
            let h = uniform(&mut rng, spec.step_height);
            let dir = rng.gen_range(-PI..PI);
            let (s, c) = dir.sin_cos();
            let px = rng.gen_range(0.25..=0.75) * ext_x;
            let py = rng.gen_range(0.25..=0.75) * ext_y;
            Box::new(move |x, y| if (x - px) * c + (y - py) * s >= 0.0 { h } else { 0.0 })
        }
        TerrainKind::BoulderField => {
            let count = rng.gen_range(spec.boulder_count.0..=spec.boulder_count.1);
            let boulders: Vec<[f64; 4]> = (0..count)
                .map(|_| {
                    [
                        rng.gen_range(0.0..=ext_x),
                        rng.gen_range(0.0..=ext_y),
                        uniform(&mut rng, spec.boulder_radius),
                        uniform(&mut rng, spec.boulder_height),
                    ]
                })
                .collect();
            Box::new(move |x, y| {
                boulders
                    .iter()
                    .map(|&[bx, by, r, h]| {
                        let d = ((x - bx).powi(2) + (y - by).powi(2)).sqrt();
                        if d < r {
                            0.5 * h * (1.0 + (PI * d / r).cos())
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
        }
    };

    ElevationMap::from_fn(dims.rows, dims.cols, res, [0.0, 0.0], |x, y| {
        spec.base + relief(x, y).clamp(0.0, top)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MapDims {
        MapDims {
            rows: 40,
            cols: 32,
            resolution: 0.05,
        }
    }

    #[test]
    fn flat_is_exactly_base() {
        let spec = TerrainGenSpec::flat();
        let map = generate_terrain(&spec, 123, small()).unwrap();
        assert!(map.heights().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        for kind in [TerrainKind::Ramp, TerrainKind::Step, TerrainKind::BoulderField] {
            let spec = TerrainGenSpec::boulder_field().with_kind(kind);
            let a = generate_terrain(&spec, 42, small()).unwrap();
            let b = generate_terrain(&spec, 42, small()).unwrap();
            let bits = |m: &ElevationMap| m.heights().iter().map(|h| h.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn boulders_respect_max_height() {
        let mut spec = TerrainGenSpec::boulder_field();
        spec.base = 0.3;
        spec.boulder_count = (40, 60);
        spec.boulder_height = (0.3, 0.5);
        let map = generate_terrain(&spec, 5, small()).unwrap();
        let max = map.heights().iter().cloned().fold(f64::MIN, f64::max);
        let min = map.heights().iter().cloned().fold(f64::MAX, f64::min);
        assert!(max <= 0.6 + 0.3);
        assert!(min >= 0.3);
        // Overlapping caps saturate the clamp.
        assert_eq!(max, 0.3 + 0.6);
    }

    #[test]
    fn degenerate_ranges_are_rejected() {
        let mut spec = TerrainGenSpec::boulder_field();
        spec.boulder_radius = (0.5, 0.1);
        assert!(generate_terrain(&spec, 0, small()).is_err());
        let mut spec = TerrainGenSpec::boulder_field();
        spec.max_height = -1.0;
        assert!(generate_terrain(&spec, 0, small()).is_err());
        let dims = MapDims {
            rows: 1,
            cols: 10,
            resolution: 0.1,
        };
        assert!(generate_terrain(&TerrainGenSpec::flat(), 0, dims).is_err());
    }
}
