//! Map images with path overlays.

use crate::error::{Result, TntError};
use crate::terrain::ElevationMap;
use crate::travmap::{ppm_bytes, TraversabilityMap};

/// Grid cells crossed by the polyline through `points` (world meters),
/// sampled every half cell. Points outside the grid are an error.
fn rasterize(
    points: &[[f64; 2]],
    rows: usize,
    cols: usize,
    origin: [f64; 2],
    res: f64,
) -> Result<Vec<(usize, usize)>> {
    let to_cell = |p: [f64; 2]| -> Result<(usize, usize)> {
        let gx = ((p[0] - origin[0]) / res).round();
        let gy = ((p[1] - origin[1]) / res).round();
        if !(gx >= 0.0 && gy >= 0.0 && (gx as usize) < rows && (gy as usize) < cols) {
            return Err(TntError::spec(format!("overlay point ({}, {}) is outside the map", p[0], p[1])));
        }
        Ok((gx as usize, gy as usize))
    };
    let mut cells = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        cells.push(to_cell(p)?);
        if let Some(&q) = points.get(i + 1) {
            let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
            let n = (2.0 * len / res).ceil() as usize;
            for k in 1..n {
                let t = k as f64 / n as f64;
                cells.push(to_cell([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])])?);
            }
        }
    }
    cells.dedup();
    Ok(cells)
}

/// Combined traversability colored from blue (easy) to red (hard), with the
/// path drawn in white.
pub fn render_traversability(tm: &TraversabilityMap, path: &[[f64; 2]]) -> Result<Vec<u8>> {
    let overlay = rasterize(path, tm.rows(), tm.cols(), tm.origin(), tm.resolution())?;
    ppm_bytes(tm.rows(), tm.cols(), tm.combined(), &overlay)
}

pub fn render_elevation(map: &ElevationMap, path: &[[f64; 2]]) -> Result<Vec<u8>> {
    let overlay = rasterize(path, map.rows(), map.cols(), map.origin(), map.resolution())?;
    ppm_bytes(map.rows(), map.cols(), map.heights(), &overlay)
}
