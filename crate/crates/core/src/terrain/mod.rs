//! Elevation maps, terrain patches and the patch function `g(E, m, n, ψ)`.
//!
//! Grid convention: an [`ElevationMap`] has `rows` (H) cells along world x and
//! `cols` (W) cells along world y. Cell `(m, n)` has its center at
//! `origin + (m, n) * resolution`, so the map extent is
//! `[origin.x, origin.x + (rows - 1) * res] × [origin.y, origin.y + (cols - 1) * res]`
//! and bilinear interpolation is defined everywhere inside it.

mod generate;
pub(crate) mod io;

pub use generate::{generate_terrain, MapDims, TerrainGenSpec, TerrainKind};
pub use io::{read_emap, read_emap_csv, write_emap, EMAP_MAGIC, EMAP_VERSION};

use crate::error::{Result, TntError};

/// Slack, in cell units, for queries that land on the border up to rounding.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ElevationMap {
    rows: usize,
    cols: usize,
    resolution: f64,
    origin: [f64; 2],
    heights: Vec<f64>,
    unknown: Vec<bool>,
}

impl ElevationMap {
    /// A fully known map. `heights` is row-major with `rows * cols` entries.
    pub fn new(
        rows: usize,
        cols: usize,
        resolution: f64,
        origin: [f64; 2],
        heights: Vec<f64>,
    ) -> Result<Self> {
        let unknown = vec![false; heights.len()];
        Self::with_unknown(rows, cols, resolution, origin, heights, unknown)
    }

    /// Builds a map with an explicit unknown mask. Unknown or non-finite cells
    /// are inpainted from their nearest known neighbour.
    pub fn with_unknown(
        rows: usize,
        cols: usize,
        resolution: f64,
        origin: [f64; 2],
        mut heights: Vec<f64>,
        mut unknown: Vec<bool>,
    ) -> Result<Self> {
        validate_geometry(rows, cols, resolution, origin)?;
        if heights.len() != rows * cols || unknown.len() != rows * cols {
            return Err(TntError::spec(format!(
                "expected {} cells, got {} heights and {} mask entries",
                rows * cols,
                heights.len(),
                unknown.len()
            )));
        }
        for (h, u) in heights.iter().zip(unknown.iter_mut()) {
            if !h.is_finite() {
                *u = true;
            }
        }
        inpaint_nearest(rows, cols, &mut heights, &unknown)?;
        Ok(Self {
            rows,
            cols,
            resolution,
            origin,
            heights,
            unknown,
        })
    }

    /// Flat map at constant height `h`, origin at zero.
    pub fn flat(rows: usize, cols: usize, resolution: f64, h: f64) -> Result<Self> {
        Self::new(rows, cols, resolution, [0.0, 0.0], vec![h; rows * cols])
    }

    /// Map sampled from `f(x, y)` at cell centers.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        resolution: f64,
        origin: [f64; 2],
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut heights = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                let x = origin[0] + m as f64 * resolution;
                let y = origin[1] + n as f64 * resolution;
                heights.push(f(x, y));
            }
        }
        Self::new(rows, cols, resolution, origin, heights)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn unknown_mask(&self) -> &[bool] {
        &self.unknown
    }

    #[inline]
    pub fn at(&self, m: usize, n: usize) -> f64 {
        self.heights[m * self.cols + n]
    }

    /// World coordinates of the center of cell `(m, n)`.
    pub fn cell_center(&self, m: usize, n: usize) -> [f64; 2] {
        [
            self.origin[0] + m as f64 * self.resolution,
            self.origin[1] + n as f64 * self.resolution,
        ]
    }

    /// Continuous grid coordinates of a world point. Coordinates within
    /// rounding distance of a cell center snap onto it.
    #[inline]
    pub fn world_to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        (
            snap((x - self.origin[0]) / self.resolution),
            snap((y - self.origin[1]) / self.resolution),
        )
    }

    /// Nearest cell to a world point, if it lies on the map.
    pub fn nearest_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (gx, gy) = self.world_to_grid(x, y);
        let (m, n) = (gx.round(), gy.round());
        if m < 0.0 || n < 0.0 || m > (self.rows - 1) as f64 || n > (self.cols - 1) as f64 {
            return None;
        }
        Some((m as usize, n as usize))
    }

    pub fn same_geometry(&self, other_rows: usize, other_cols: usize, res: f64, origin: [f64; 2]) -> bool {
        self.rows == other_rows && self.cols == other_cols && self.resolution == res && self.origin == origin
    }

    /// Whether grid coordinates lie inside the interpolation extent.
    #[inline]
    pub fn grid_in_extent(&self, gx: f64, gy: f64) -> bool {
        gx >= -EDGE_EPS
            && gy >= -EDGE_EPS
            && gx <= (self.rows - 1) as f64 + EDGE_EPS
            && gy <= (self.cols - 1) as f64 + EDGE_EPS
    }

    /// Bilinear height at continuous grid coordinates. Coordinates are clamped
    /// to the extent; callers check bounds first.
    #[inline]
    pub fn sample_grid(&self, gx: f64, gy: f64) -> f64 {
        let gx = gx.clamp(0.0, (self.rows - 1) as f64);
        let gy = gy.clamp(0.0, (self.cols - 1) as f64);
        let i = (gx.floor() as usize).min(self.rows - 2);
        let j = (gy.floor() as usize).min(self.cols - 2);
        let fx = gx - i as f64;
        let fy = gy - j as f64;
        let base = i * self.cols + j;
        let h00 = self.heights[base];
        let h01 = self.heights[base + 1];
        let h10 = self.heights[base + self.cols];
        let h11 = self.heights[base + self.cols + 1];
        bilerp(h00, h01, h10, h11, fx, fy)
    }

    /// Bilinear height at a world point.
    pub fn height_at(&self, x: f64, y: f64) -> Result<f64> {
        let (gx, gy) = self.world_to_grid(x, y);
        if !self.grid_in_extent(gx, gy) {
            return Err(TntError::Bounds { x, y });
        }
        Ok(self.sample_grid(gx, gy))
    }

    /// Whether a rotated square patch centered at grid coordinates fits.
    pub fn patch_fits(&self, gx: f64, gy: f64, yaw: f64, patch_cells: usize) -> bool {
        let r = patch_half_extent(patch_cells, yaw);
        self.grid_in_extent(gx - r, gy - r) && self.grid_in_extent(gx + r, gy + r)
    }

    /// `g(E, m, n, ψ)`: the yaw-aligned patch centered on cell `(m, n)`.
    pub fn extract_patch(&self, m: usize, n: usize, yaw: f64, spec: &PatchSpec) -> Result<TerrainPatch> {
        self.extract_patch_grid(m as f64, n as f64, yaw, spec.patch_cells)
    }

    /// Patch centered at an arbitrary world point (used by the simulator).
    pub fn extract_patch_at(&self, x: f64, y: f64, yaw: f64, patch_cells: usize) -> Result<TerrainPatch> {
        let (gx, gy) = self.world_to_grid(x, y);
        self.extract_patch_grid(gx, gy, yaw, patch_cells)
    }

    fn extract_patch_grid(&self, gx: f64, gy: f64, yaw: f64, size: usize) -> Result<TerrainPatch> {
        if size == 0 {
            return Err(TntError::spec("patch_cells must be positive"));
        }
        if !self.patch_fits(gx, gy, yaw, size) {
            return Err(TntError::Bounds {
                x: self.origin[0] + gx * self.resolution,
                y: self.origin[1] + gy * self.resolution,
            });
        }
        let mut cells = Vec::with_capacity(size * size);
        self.fill_patch(gx, gy, yaw, size, &mut cells);
        Ok(TerrainPatch {
            size,
            cells,
            center: (gx, gy),
            yaw,
            resolution: self.resolution,
        })
    }

    /// Appends the patch samples (row `a` = forward, column `b` = left) to `out`.
    pub(crate) fn fill_patch(&self, gx: f64, gy: f64, yaw: f64, size: usize, out: &mut Vec<f64>) {
        let c = (size as f64 - 1.0) / 2.0;
        let (s, co) = yaw.sin_cos();
        for a in 0..size {
            let u = a as f64 - c;
            for b in 0..size {
                let w = b as f64 - c;
                let px = gx + u * co - w * s;
                let py = gy + u * s + w * co;
                out.push(self.sample_grid(px, py));
            }
        }
    }
}

/// Bilinear blend in difference form, exact on constant cells.
#[inline]
fn bilerp(h00: f64, h01: f64, h10: f64, h11: f64, fx: f64, fy: f64) -> f64 {
    let lerp = |p: f64, q: f64, t: f64| if t == 1.0 { q } else { p + t * (q - p) };
    let a = lerp(h00, h01, fy);
    let b = lerp(h10, h11, fy);
    lerp(a, b, fx)
}

#[inline]
fn snap(g: f64) -> f64 {
    let r = g.round();
    if (g - r).abs() < EDGE_EPS {
        r
    } else {
        g
    }
}

/// Half side of the axis-aligned box, in cells, covering a rotated square patch.
pub fn patch_half_extent(patch_cells: usize, yaw: f64) -> f64 {
    let c = (patch_cells as f64 - 1.0) / 2.0;
    let r = c * (yaw.cos().abs() + yaw.sin().abs());
    // cos(π/2) is not exactly zero in floating point.
    if (r - r.round()).abs() < 1e-9 {
        r.round()
    } else {
        r
    }
}

fn validate_geometry(rows: usize, cols: usize, resolution: f64, origin: [f64; 2]) -> Result<()> {
    if rows < 2 || cols < 2 {
        return Err(TntError::spec(format!("map must be at least 2x2 cells, got {rows}x{cols}")));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(TntError::spec(format!("resolution must be positive, got {resolution}")));
    }
    if !origin.iter().all(|o| o.is_finite()) {
        return Err(TntError::spec("origin must be finite"));
    }
    Ok(())
}

/// Assigns every unknown cell the height of its nearest known cell
/// (Euclidean in grid units, ties broken by row-major order).
fn inpaint_nearest(rows: usize, cols: usize, heights: &mut [f64], unknown: &[bool]) -> Result<()> {
    if !unknown.iter().any(|&u| u) {
        return Ok(());
    }
    if unknown.iter().all(|&u| u) {
        return Err(TntError::spec("map has no known cells to inpaint from"));
    }
    let source: Vec<f64> = heights.to_vec();
    let max_r = rows.max(cols) as i64;
    for m in 0..rows as i64 {
        for n in 0..cols as i64 {
            let idx = (m as usize) * cols + n as usize;
            if !unknown[idx] {
                continue;
            }
            // Expanding Chebyshev rings; once a candidate at squared distance d2
            // is found, rings up to ceil(sqrt(d2)) may still hold a closer cell.
            let mut best: Option<(i64, usize)> = None;
            let mut limit = max_r;
            let mut r = 1;
            while r <= limit {
                for dm in -r..=r {
                    for dn in -r..=r {
                        if dm.abs() != r && dn.abs() != r {
                            continue;
                        }
                        let (qm, qn) = (m + dm, n + dn);
                        if qm < 0 || qn < 0 || qm >= rows as i64 || qn >= cols as i64 {
                            continue;
                        }
                        let q = qm as usize * cols + qn as usize;
                        if unknown[q] {
                            continue;
                        }
                        let d2 = dm * dm + dn * dn;
                        let better = match best {
                            None => true,
                            Some((bd, bq)) => d2 < bd || (d2 == bd && q < bq),
                        };
                        if better {
                            best = Some((d2, q));
                        }
                    }
                }
                if let Some((d2, _)) = best {
                    limit = limit.min((d2 as f64).sqrt().ceil() as i64);
                }
                r += 1;
            }
            let (_, q) = best.expect("at least one known cell exists");
            heights[idx] = source[q];
        }
    }
    Ok(())
}

/// Patch size and the candidate orientation set Ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSpec {
    pub patch_cells: usize,
    pub angles: Vec<f64>,
}

impl Default for PatchSpec {
    fn default() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self {
            patch_cells: 25,
            angles: vec![-FRAC_PI_2, -FRAC_PI_4, 0.0, FRAC_PI_4, FRAC_PI_2],
        }
    }
}

impl PatchSpec {
    pub fn new(patch_cells: usize, angles: Vec<f64>) -> Result<Self> {
        let spec = Self { patch_cells, angles };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_cells < 2 {
            return Err(TntError::spec("patch_cells must be at least 2"));
        }
        if self.angles.is_empty() {
            return Err(TntError::spec("angle set must not be empty"));
        }
        for &a in &self.angles {
            if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&a) {
                return Err(TntError::spec(format!("angle {a} outside [-pi, pi)")));
            }
        }
        Ok(())
    }

    /// Largest half extent over the angle set: cells closer than this to the
    /// border cannot host a patch for every orientation.
    pub fn margin_cells(&self) -> f64 {
        self.angles
            .iter()
            .map(|&a| patch_half_extent(self.patch_cells, a))
            .fold(0.0, f64::max)
    }
}

/// Square, yaw-aligned height window. Row index `a` runs along the vehicle's
/// forward axis, column index `b` along its left axis; the vehicle body center
/// sits at the geometric center of the array.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainPatch {
    size: usize,
    cells: Vec<f64>,
    center: (f64, f64),
    yaw: f64,
    resolution: f64,
}

impl TerrainPatch {
    /// Hand-built patch, mostly for tests and fixtures.
    pub fn from_cells(size: usize, cells: Vec<f64>, resolution: f64) -> Result<Self> {
        if size == 0 || cells.len() != size * size {
            return Err(TntError::spec(format!(
                "patch of side {size} needs {} cells, got {}",
                size * size,
                cells.len()
            )));
        }
        if !cells.iter().all(|c| c.is_finite()) {
            return Err(TntError::Numeric("patch cells must be finite".into()));
        }
        if !(resolution > 0.0) {
            return Err(TntError::spec("patch resolution must be positive"));
        }
        Ok(Self {
            size,
            cells,
            center: (0.0, 0.0),
            yaw: 0.0,
            resolution,
        })
    }

    /// Patch whose cell at forward offset `u` and left offset `w` (meters)
    /// holds `f(u, w)`.
    pub fn from_fn(size: usize, resolution: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let c = (size as f64 - 1.0) / 2.0;
        let mut cells = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                cells.push(f((a as f64 - c) * resolution, (b as f64 - c) * resolution));
            }
        }
        Self::from_cells(size, cells, resolution)
    }

    /// Unchecked constructor for cells produced by `fill_patch`.
    pub(crate) fn from_raw(size: usize, cells: Vec<f64>, center: (f64, f64), yaw: f64, resolution: f64) -> Self {
        Self {
            size,
            cells,
            center,
            yaw,
            resolution,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.cells[a * self.size + b]
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn mean(&self) -> f64 {
        self.cells.iter().sum::<f64>() / self.cells.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.cells.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / self.cells.len() as f64
    }

    /// Copy with `c` added to every cell.
    pub fn offset(&self, c: f64) -> Self {
        let mut p = self.clone();
        p.cells.iter_mut().for_each(|h| *h += c);
        p
    }

    /// Left-right mirror (about the forward axis).
    pub fn mirror_lateral(&self) -> Self {
        let n = self.size;
        let mut p = self.clone();
        for a in 0..n {
            for b in 0..n {
                p.cells[a * n + b] = self.cells[a * n + (n - 1 - b)];
            }
        }
        p
    }

    /// Front-rear mirror (about the lateral axis).
    pub fn mirror_longitudinal(&self) -> Self {
        let n = self.size;
        let mut p = self.clone();
        for a in 0..n {
            for b in 0..n {
                p.cells[a * n + b] = self.cells[(n - 1 - a) * n + b];
            }
        }
        p
    }

    /// Bilinear lookup at body-frame offsets in meters, `None` outside the patch.
    pub fn sample_local(&self, forward: f64, left: f64) -> Option<f64> {
        let c = (self.size as f64 - 1.0) / 2.0;
        let a = c + forward / self.resolution;
        let b = c + left / self.resolution;
        let hi = (self.size - 1) as f64;
        if a < -EDGE_EPS || b < -EDGE_EPS || a > hi + EDGE_EPS || b > hi + EDGE_EPS {
            return None;
        }
        if self.size == 1 {
            return Some(self.cells[0]);
        }
        let a = a.clamp(0.0, hi);
        let b = b.clamp(0.0, hi);
        let i = (a.floor() as usize).min(self.size - 2);
        let j = (b.floor() as usize).min(self.size - 2);
        let fa = a - i as f64;
        let fb = b - j as f64;
        let n = self.size;
        let h00 = self.cells[i * n + j];
        let h01 = self.cells[i * n + j + 1];
        let h10 = self.cells[(i + 1) * n + j];
        let h11 = self.cells[(i + 1) * n + j + 1];
        Some(bilerp(h00, h01, h10, h11, fa, fb))
    }
}
