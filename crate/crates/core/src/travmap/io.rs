//! TMAP files, encoder model files, and heatmap images.
//!
//! TMAP layout (little endian): magic `TMAP`, u16 version, the EMAP geometry
//! header (u32 H, u32 W, f64 resolution, f64 origin_x, f64 origin_y), u8
//! channel count (14), channels as f32 (channel-major, each row-major),
//! combined as f32, one valid byte per cell, then the 14 combination weights
//! as f64.
//!
//! Images are written with map rows as image rows and map columns as image
//! columns.

use std::fs;
use std::path::Path;

use super::channels::{CombineWeights, CHANNELS};
use super::encoder::MapEncoder;
use super::map::TraversabilityMap;
use crate::codec::{Reader, Writer};
use crate::error::{Result, TntError};
use crate::learn::{read_header, read_params, write_header, write_params, KIND_ENCODER};
use crate::terrain::io::{decode_geometry, encode_geometry};
use crate::terrain::PatchSpec;

pub const TMAP_MAGIC: &[u8; 4] = b"TMAP";
pub const TMAP_VERSION: u16 = 1;

pub fn encode_tmap(tm: &TraversabilityMap) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(TMAP_MAGIC).u16(TMAP_VERSION);
    encode_geometry(&mut w, tm.rows(), tm.cols(), tm.resolution(), tm.origin());
    w.u8(CHANNELS as u8);
    w.f32s(tm.channels().iter().map(|&v| v as f32));
    w.f32s(tm.combined().iter().map(|&v| v as f32));
    for &v in tm.valid_mask() {
        w.u8(u8::from(v));
    }
    w.f64s(&tm.weights().as_array());
    w.finish()
}

/// Decodes a TMAP file. Stored values are taken as-is (f32 precision), not
/// recomputed from the channels.
pub fn decode_tmap(data: &[u8]) -> Result<TraversabilityMap> {
    let mut r = Reader::new(data);
    r.magic(TMAP_MAGIC)?;
    r.version(TMAP_VERSION)?;
    let g = decode_geometry(&mut r)?;
    let nch = r.u8("channel count")? as usize;
    if nch != CHANNELS {
        return Err(TntError::format(format!("expected {CHANNELS} channels, found {nch}")));
    }
    let n = g.rows * g.cols;
    if r.remaining() < n * (4 * CHANNELS + 4 + 1) + 8 * CHANNELS {
        return Err(TntError::format("short payload"));
    }
    let channels = r.f32s(CHANNELS * n, "channels")?.into_iter().map(f64::from).collect();
    let combined = r.f32s(n, "combined")?.into_iter().map(f64::from).collect();
    let valid = r
        .take(n, "valid mask")?
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(TntError::format(format!("bad mask byte {other}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    let wv = r.f64s(CHANNELS, "weights")?;
    r.finish()?;
    let weights = CombineWeights::from_array(std::array::from_fn(|i| wv[i]));
    weights
        .validate()
        .map_err(|e| TntError::format(format!("stored weights invalid: {e}")))?;
    Ok(TraversabilityMap::from_parts_unchecked(
        g.rows,
        g.cols,
        g.resolution,
        g.origin,
        channels,
        combined,
        valid,
        weights,
    ))
}

pub fn write_tmap(tm: &TraversabilityMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tmap(tm))?;
    Ok(())
}

pub fn read_tmap(path: impl AsRef<Path>) -> Result<TraversabilityMap> {
    decode_tmap(&fs::read(path)?)
}

pub fn encode_encoder(enc: &MapEncoder) -> Vec<u8> {
    let mut w = Writer::new();
    write_header(&mut w, KIND_ENCODER, &enc.arch);
    w.u32(enc.pool as u32)
        .u32(enc.radius as u32)
        .f64(enc.height_scale)
        .f64(enc.resolution)
        .u32(enc.spec.patch_cells as u32)
        .u32(enc.spec.angles.len() as u32)
        .f64s(&enc.spec.angles)
        .f64s(&enc.chan_mean)
        .f64s(&enc.chan_scale);
    write_params(&mut w, &enc.params);
    w.finish()
}

pub fn decode_encoder(data: &[u8]) -> Result<MapEncoder> {
    let mut r = Reader::new(data);
    let arch = read_header(&mut r, KIND_ENCODER)?;
    let pool = r.u32("pool")? as usize;
    let radius = r.u32("radius")? as usize;
    let height_scale = r.f64("height scale")?;
    let resolution = r.f64("resolution")?;
    let patch_cells = r.u32("patch cells")? as usize;
    let n_angles = r.u32("angle count")? as usize;
    if n_angles > 1024 {
        return Err(TntError::format("implausible angle count"));
    }
    let angles = r.f64s(n_angles, "angles")?;
    let mean = r.f64s(CHANNELS, "channel mean")?;
    let scale = r.f64s(CHANNELS, "channel scale")?;
    let params = read_params(&mut r, &arch)?;
    r.finish()?;
    if pool == 0 || arch.input != 2 * (2 * radius + 1).pow(2) || arch.output != CHANNELS {
        return Err(TntError::format("encoder descriptor is inconsistent"));
    }
    let spec = PatchSpec::new(patch_cells, angles).map_err(|e| TntError::format(e.to_string()))?;
    Ok(MapEncoder {
        arch,
        params,
        pool,
        radius,
        height_scale,
        resolution,
        spec,
        chan_mean: std::array::from_fn(|i| mean[i]),
        chan_scale: std::array::from_fn(|i| scale[i]),
    })
}

pub fn write_encoder(enc: &MapEncoder, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_encoder(enc))?;
    Ok(())
}

pub fn read_encoder(path: impl AsRef<Path>) -> Result<MapEncoder> {
    decode_encoder(&fs::read(path)?)
}

/// Min-max scaling to [0, 1]; a constant input maps to 0.
fn unit_scale(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 && span.is_finite() { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 })
        .collect()
}

/// Blue (0) through cyan, green and yellow to red (1).
pub fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let q = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    if t < 0.25 {
        [0, q(4.0 * t), 255]
    } else if t < 0.5 {
        [0, 255, q(1.0 - 4.0 * (t - 0.25))]
    } else if t < 0.75 {
        [q(4.0 * (t - 0.5)), 255, 0]
    } else {
        [255, q(1.0 - 4.0 * (t - 0.75)), 0]
    }
}

/// 8-bit binary PGM of `values` (`rows × cols`, row-major), min-max scaled.
pub fn pgm_bytes(rows: usize, cols: usize, values: &[f64]) -> Result<Vec<u8>> {
    if values.len() != rows * cols {
        return Err(TntError::spec("image data does not match its dimensions"));
    }
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(unit_scale(values).into_iter().map(|t| (t * 255.0).round() as u8));
    Ok(out)
}

/// Binary PPM heatmap of `values`, with `overlay` cells (row, col) drawn white.
pub fn ppm_bytes(rows: usize, cols: usize, values: &[f64], overlay: &[(usize, usize)]) -> Result<Vec<u8>> {
    if values.len() != rows * cols {
        return Err(TntError::spec("image data does not match its dimensions"));
    }
    let mut rgb: Vec<[u8; 3]> = unit_scale(values).into_iter().map(colormap).collect();
    for &(r, c) in overlay {
        if r >= rows || c >= cols {
            return Err(TntError::spec(format!("overlay cell ({r}, {c}) outside the {rows}x{cols} image")));
        }
        rgb[r * cols + c] = [255, 255, 255];
    }
    let mut out = format!("P6\n{cols} {rows}\n255\n").into_bytes();
    out.extend(rgb.into_iter().flatten());
    Ok(out)
}
