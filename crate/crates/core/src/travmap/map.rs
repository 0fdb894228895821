//! Traversability maps: label generation by orientation averaging, channel
//! storage, and block pooling into coarse cost grids.

use rayon::prelude::*;

use super::channels::{batch_channels, combine_slice, ChannelVector, CombineWeights, CHANNELS};
use crate::dynamics::VehicleGeometry;
use crate::error::{Result, TntError};
use crate::learn::Regressor;
use crate::terrain::{ElevationMap, PatchSpec, TerrainPatch};

pub const DEFAULT_LABEL_STRIDE: usize = 2;

/// Per-cell channel stack plus the combined traversability value (higher is
/// harder). Invalid cells hold zero channels and the largest combined value
/// found among valid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversabilityMap {
    rows: usize,
    cols: usize,
    resolution: f64,
    origin: [f64; 2],
    /// Channel-major: channel `c` occupies `c*H*W .. (c+1)*H*W`.
    channels: Vec<f64>,
    combined: Vec<f64>,
    valid: Vec<bool>,
    weights: CombineWeights,
}

impl TraversabilityMap {
    /// Builds a map from channel-major data, computing the combined layer.
    pub fn from_channels(
        rows: usize,
        cols: usize,
        resolution: f64,
        origin: [f64; 2],
        mut channels: Vec<f64>,
        valid: Vec<bool>,
        weights: CombineWeights,
    ) -> Result<Self> {
        let n = rows * cols;
        if channels.len() != CHANNELS * n || valid.len() != n {
            return Err(TntError::spec("channel or mask size does not match the geometry"));
        }
        weights.validate()?;
        for i in 0..n {
            if !valid[i] {
                for c in 0..CHANNELS {
                    channels[c * n + i] = 0.0;
                }
            }
        }
        let mut tm = Self {
            rows,
            cols,
            resolution,
            origin,
            channels,
            combined: vec![0.0; n],
            valid,
            weights,
        };
        tm.recompute();
        Ok(tm)
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        resolution: f64,
        origin: [f64; 2],
        channels: Vec<f64>,
        combined: Vec<f64>,
        valid: Vec<bool>,
        weights: CombineWeights,
    ) -> Self {
        Self {
            rows,
            cols,
            resolution,
            origin,
            channels,
            combined,
            valid,
            weights,
        }
    }

    fn recompute(&mut self) {
        let n = self.rows * self.cols;
        let w = self.weights.as_array();
        let mut ch = [0.0; CHANNELS];
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            if self.valid[i] {
                for (c, v) in ch.iter_mut().enumerate() {
                    *v = self.channels[c * n + i];
                }
                self.combined[i] = combine_slice(&ch, &w);
                max = max.max(self.combined[i]);
            }
        }
        let fill = if max.is_finite() { max } else { 0.0 };
        for i in 0..n {
            if !self.valid[i] {
                self.combined[i] = fill;
            }
        }
    }

    /// Same channels under different weights.
    pub fn recombine(&self, weights: CombineWeights) -> Result<Self> {
        weights.validate()?;
        let mut tm = self.clone();
        tm.weights = weights;
        tm.recompute();
        Ok(tm)
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

    pub fn weights(&self) -> &CombineWeights {
        &self.weights
    }

    pub fn channels(&self) -> &[f64] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.rows * self.cols;
        &self.channels[c * n..(c + 1) * n]
    }

    pub fn channel_vector(&self, m: usize, n: usize) -> ChannelVector {
        let hw = self.rows * self.cols;
        let i = m * self.cols + n;
        ChannelVector(std::array::from_fn(|c| self.channels[c * hw + i]))
    }

    pub fn combined(&self) -> &[f64] {
        &self.combined
    }

    pub fn combined_at(&self, m: usize, n: usize) -> f64 {
        self.combined[m * self.cols + n]
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, m: usize, n: usize) -> bool {
        self.valid[m * self.cols + n]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// `(min, max)` of the combined value over valid cells.
    pub fn valid_range(&self) -> Option<(f64, f64)> {
        self.combined
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .fold(None, |acc, (&c, _)| match acc {
                None => Some((c, c)),
                Some((lo, hi)) => Some((lo.min(c), hi.max(c))),
            })
    }

    pub fn max_combined(&self) -> f64 {
        self.combined.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn matches(&self, map: &ElevationMap) -> bool {
        map.same_geometry(self.rows, self.cols, self.resolution, self.origin)
    }

    pub fn cell_center(&self, m: usize, n: usize) -> [f64; 2] {
        [
            self.origin[0] + m as f64 * self.resolution,
            self.origin[1] + n as f64 * self.resolution,
        ]
    }

    /// Nearest cell to a world point, `None` outside the map.
    pub fn nearest_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let gx = ((x - self.origin[0]) / self.resolution).round();
        let gy = ((y - self.origin[1]) / self.resolution).round();
        if gx < 0.0 || gy < 0.0 || gx > (self.rows - 1) as f64 || gy > (self.cols - 1) as f64 || !gx.is_finite() || !gy.is_finite() {
            return None;
        }
        Some((gx as usize, gy as usize))
    }

    /// Combined value of the nearest cell, `None` outside the map.
    pub fn combined_at_world(&self, x: f64, y: f64) -> Option<f64> {
        self.nearest_cell(x, y).map(|(m, n)| self.combined_at(m, n))
    }
}

/// Cells whose patch fits inside the map for every orientation of `spec`.
pub fn valid_mask(map: &ElevationMap, spec: &PatchSpec) -> Vec<bool> {
    let (h, w) = (map.rows(), map.cols());
    let mut mask = vec![false; h * w];
    for m in 0..h {
        for n in 0..w {
            mask[m * w + n] = spec
                .angles
                .iter()
                .all(|&a| map.patch_fits(m as f64, n as f64, a, spec.patch_cells));
        }
    }
    mask
}

/// Sorted lattice positions over `lo..=hi` every `stride`, always including `hi`.
fn lattice(lo: usize, hi: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (lo..=hi).step_by(stride).collect();
    if *v.last().expect("non-empty range") != hi {
        v.push(hi);
    }
    v
}

/// Segment index and fraction of `x` along a sorted lattice.
fn locate(lat: &[usize], x: usize) -> (usize, f64) {
    if lat.len() == 1 {
        return (0, 0.0);
    }
    let k = lat.partition_point(|&p| p <= x).clamp(1, lat.len() - 1) - 1;
    let (a, b) = (lat[k], lat[k + 1]);
    (k, (x - a) as f64 / (b - a) as f64)
}

/// Orientation-averaged channels at a single cell.
pub fn cell_channels(
    map: &ElevationMap,
    m: usize,
    n: usize,
    spec: &PatchSpec,
    geom: &VehicleGeometry,
    vel: &Regressor,
    pose: &Regressor,
) -> Result<ChannelVector> {
    let patches = spec
        .angles
        .iter()
        .map(|&a| map.extract_patch(m, n, a, spec))
        .collect::<Result<Vec<_>>>()?;
    let rows = batch_channels(&patches, geom, vel, pose)?;
    let mean = rows.mean_axis(ndarray::Axis(0)).expect("at least one angle");
    Ok(ChannelVector(std::array::from_fn(|c| mean[c])))
}

/// Label map with the default lattice stride.
pub fn build_label_map(
    map: &ElevationMap,
    spec: &PatchSpec,
    geom: &VehicleGeometry,
    vel: &Regressor,
    pose: &Regressor,
    weights: &CombineWeights,
) -> Result<TraversabilityMap> {
    build_label_map_strided(map, spec, geom, vel, pose, weights, DEFAULT_LABEL_STRIDE)
}

/// Evaluates the orientation-averaged channels on a lattice of every
/// `stride`-th valid cell (plus the last valid row and column) and fills the
/// remaining valid cells by bilinear interpolation between lattice cells.
pub fn build_label_map_strided(
    map: &ElevationMap,
    spec: &PatchSpec,
    geom: &VehicleGeometry,
    vel: &Regressor,
    pose: &Regressor,
    weights: &CombineWeights,
    stride: usize,
) -> Result<TraversabilityMap> {
    spec.validate()?;
    weights.validate()?;
    if stride == 0 {
        return Err(TntError::spec("label stride must be positive"));
    }
    let (h, w) = (map.rows(), map.cols());
    let hw = h * w;
    let valid = valid_mask(map, spec);
    let mut channels = vec![0.0; CHANNELS * hw];

    let valid_rows: Vec<usize> = (0..h).filter(|&m| (0..w).any(|n| valid[m * w + n])).collect();
    let valid_cols: Vec<usize> = (0..w).filter(|&n| (0..h).any(|m| valid[m * w + n])).collect();
    if let (Some(&m0), Some(&m1), Some(&n0), Some(&n1)) =
        (valid_rows.first(), valid_rows.last(), valid_cols.first(), valid_cols.last())
    {
        let lat_r = lattice(m0, m1, stride);
        let lat_c = lattice(n0, n1, stride);
        let nc = lat_c.len();
        let per_row: Vec<Result<Vec<[f64; CHANNELS]>>> = lat_r
            .par_iter()
            .map(|&m| {
                let mut patches = Vec::with_capacity(nc * spec.angles.len());
                for &n in &lat_c {
                    for &a in &spec.angles {
                        let mut cells = Vec::with_capacity(spec.patch_cells * spec.patch_cells);
                        map.fill_patch(m as f64, n as f64, a, spec.patch_cells, &mut cells);
                        patches.push(TerrainPatch::from_raw(
                            spec.patch_cells,
                            cells,
                            (m as f64, n as f64),
                            a,
                            map.resolution(),
                        ));
                    }
                }
                let rows = batch_channels(&patches, geom, vel, pose)?;
                let k = spec.angles.len() as f64;
                Ok((0..nc)
                    .map(|j| {
                        let block = rows.slice(ndarray::s![j * spec.angles.len()..(j + 1) * spec.angles.len(), ..]);
                        std::array::from_fn(|c| block.column(c).sum() / k)
                    })
                    .collect())
            })
            .collect();
        let grid: Vec<Vec<[f64; CHANNELS]>> = per_row.into_iter().collect::<Result<_>>()?;

        for &m in &valid_rows {
            let (i, fr) = locate(&lat_r, m);
            let i1 = (i + 1).min(lat_r.len() - 1);
            for &n in &valid_cols {
                if !valid[m * w + n] {
                    continue;
                }
                let (j, fc) = locate(&lat_c, n);
                let j1 = (j + 1).min(nc - 1);
                for c in 0..CHANNELS {
                    let v00 = grid[i][j][c];
                    let v01 = grid[i][j1][c];
                    let v10 = grid[i1][j][c];
                    let v11 = grid[i1][j1][c];
                    channels[c * hw + m * w + n] = if fr == 0.0 && fc == 0.0 {
                        v00
                    } else {
                        (1.0 - fr) * ((1.0 - fc) * v00 + fc * v01) + fr * ((1.0 - fc) * v10 + fc * v11)
                    };
                }
            }
        }
    }
    TraversabilityMap::from_channels(h, w, map.resolution(), map.origin(), channels, valid, *weights)
}

/// Coarse planning grid. Rows and columns carry the world coordinate of
/// their block centers, which need not be evenly spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
    row_x: Vec<f64>,
    col_y: Vec<f64>,
}

impl CostGrid {
    /// Evenly spaced grid whose cell `(r, c)` center is `origin + (r, c) * spacing`.
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>, origin: [f64; 2], spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 || costs.len() != rows * cols {
            return Err(TntError::spec("cost grid size does not match its dimensions"));
        }
        if costs.iter().any(|c| c.is_nan() || *c < 0.0) {
            return Err(TntError::spec("costs must be non-negative (infinity marks blocked cells)"));
        }
        Ok(Self {
            rows,
            cols,
            costs,
            row_x: (0..rows).map(|r| origin[0] + r as f64 * spacing).collect(),
            col_y: (0..cols).map(|c| origin[1] + c as f64 * spacing).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn cost(&self, r: usize, c: usize) -> f64 {
        self.costs[r * self.cols + c]
    }

    pub fn set_cost(&mut self, r: usize, c: usize, v: f64) {
        self.costs[r * self.cols + c] = v;
    }

    pub fn world(&self, r: usize, c: usize) -> [f64; 2] {
        [self.row_x[r], self.col_y[c]]
    }

    /// Cell whose center is nearest to a world point (clamped to the grid).
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let nearest = |v: &[f64], t: f64| {
            v.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        (nearest(&self.row_x, x), nearest(&self.col_y, y))
    }
}

/// Block bounds `[floor(i*n/k), floor((i+1)*n/k))` for block `i` of `k`.
fn block(i: usize, n: usize, k: usize) -> (usize, usize) {
    (i * n / k, (i + 1) * n / k)
}

/// Block-average pooling of the combined layer. Invalid cells are left out of
/// the means; a block without valid cells gets the map's largest combined value.
pub fn downsample(tm: &TraversabilityMap, out_rows: usize, out_cols: usize) -> Result<CostGrid> {
    if out_rows == 0 || out_cols == 0 || out_rows > tm.rows || out_cols > tm.cols {
        return Err(TntError::spec(format!(
            "cannot pool a {}x{} map to {out_rows}x{out_cols}",
            tm.rows, tm.cols
        )));
    }
    let fill = tm.max_combined();
    let mut costs = Vec::with_capacity(out_rows * out_cols);
    let mut row_x = Vec::with_capacity(out_rows);
    let mut col_y = Vec::with_capacity(out_cols);
    for i in 0..out_rows {
        let (a, b) = block(i, tm.rows, out_rows);
        row_x.push(tm.origin[0] + 0.5 * (a + b - 1) as f64 * tm.resolution);
    }
    for j in 0..out_cols {
        let (a, b) = block(j, tm.cols, out_cols);
        col_y.push(tm.origin[1] + 0.5 * (a + b - 1) as f64 * tm.resolution);
    }
    for i in 0..out_rows {
        let (r0, r1) = block(i, tm.rows, out_rows);
        for j in 0..out_cols {
            let (c0, c1) = block(j, tm.cols, out_cols);
            let (mut sum, mut count) = (0.0, 0usize);
            for m in r0..r1 {
                for n in c0..c1 {
                    if tm.is_valid(m, n) {
                        sum += tm.combined_at(m, n);
                        count += 1;
                    }
                }
            }
            costs.push(if count > 0 { sum / count as f64 } else { fill });
        }
    }
    Ok(CostGrid {
        rows: out_rows,
        cols: out_cols,
        costs,
        row_x,
        col_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(rows: usize, cols: usize, roll: impl Fn(usize, usize) -> f64) -> TraversabilityMap {
        let n = rows * cols;
        let mut ch = vec![0.0; CHANNELS * n];
        for m in 0..rows {
            for k in 0..cols {
                ch[m * cols + k] = roll(m, k);
            }
        }
        let w = CombineWeights::from_array(std::array::from_fn(|c| if c == 0 { 1.0 } else { 0.0 }));
        TraversabilityMap::from_channels(rows, cols, 0.1, [0.0, 0.0], ch, vec![true; n], w).unwrap()
    }

    #[test]
    fn lattice_includes_last_index() {
        assert_eq!(lattice(3, 9, 2), vec![3, 5, 7, 9]);
        assert_eq!(lattice(3, 10, 2), vec![3, 5, 7, 9, 10]);
        assert_eq!(lattice(4, 4, 2), vec![4]);
        assert_eq!(locate(&[3, 5, 7, 9, 10], 10), (3, 1.0));
        assert_eq!(locate(&[3, 5, 7], 4), (0, 0.5));
    }

    #[test]
    fn checkerboard_pools_to_half() {
        let tm = plain(4, 4, |m, n| ((m + n) % 2) as f64);
        let g = downsample(&tm, 2, 2).unwrap();
        assert!(g.costs().iter().all(|&c| c == 0.5));
        assert_eq!(g.world(0, 0), [0.05, 0.05]);
    }

    #[test]
    fn constant_map_pools_to_constant() {
        let tm = plain(320, 260, |_, _| 0.7);
        let g = downsample(&tm, 31, 25).unwrap();
        assert_eq!((g.rows(), g.cols()), (31, 25));
        assert!(g.costs().iter().all(|&c| (c - 0.7).abs() < 1e-12));
        assert!(downsample(&tm, 321, 25).unwrap_err().is_spec());
    }

    #[test]
    fn near_uniform_blocks() {
        let sizes: Vec<usize> = (0..31).map(|i| block(i, 320, 31)).map(|(a, b)| b - a).collect();
        assert!(sizes.iter().all(|&s| s == 10 || s == 11));
        assert_eq!(sizes.iter().sum::<usize>(), 320);
    }

    #[test]
    fn invalid_cells_are_excluded_and_filled() {
        let n = 16;
        let mut ch = vec![0.0; CHANNELS * n];
        (0..n).for_each(|i| ch[i] = i as f64);
        let mut valid = vec![true; n];
        // Block (0, 0) fully invalid, block (1, 1) half invalid.
        for i in [0, 1, 4, 5, 10, 11] {
            valid[i] = false;
        }
        let w = CombineWeights::from_array(std::array::from_fn(|c| if c == 0 { 1.0 } else { 0.0 }));
        let tm = TraversabilityMap::from_channels(4, 4, 0.1, [0.0; 2], ch, valid, w).unwrap();
        assert_eq!(tm.max_combined(), 15.0);
        assert_eq!(tm.combined_at(0, 0), 15.0);
        assert_eq!(tm.channel(0)[0], 0.0);
        let g = downsample(&tm, 2, 2).unwrap();
        assert_eq!(g.cost(0, 0), 15.0);
        assert_eq!(g.cost(1, 1), 14.5);
    }

    #[test]
    fn recombine_scales_linearly() {
        let tm = plain(3, 3, |m, n| (m * 3 + n) as f64 * 0.1);
        let t2 = tm.recombine(tm.weights().scaled(2.0)).unwrap();
        for (a, b) in tm.combined().iter().zip(t2.combined()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }
}
