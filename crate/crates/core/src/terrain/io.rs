//! EMAP binary files and CSV fixtures.
//!
//! EMAP layout (little endian): magic `EMAP`, u16 version = 1, u32 H, u32 W,
//! f64 resolution, f64 origin_x, f64 origin_y, H*W f64 heights (row-major),
//! H*W mask bytes (1 = originally unknown).

use std::fs;
use std::path::Path;

use super::ElevationMap;
use crate::codec::{Reader, Writer};
use crate::error::{Result, TntError};

pub const EMAP_MAGIC: &[u8; 4] = b"EMAP";
pub const EMAP_VERSION: u16 = 1;

pub(crate) fn encode_geometry(w: &mut Writer, map_rows: usize, map_cols: usize, res: f64, origin: [f64; 2]) {
    w.u32(map_rows as u32).u32(map_cols as u32).f64(res).f64(origin[0]).f64(origin[1]);
}

pub(crate) struct Geometry {
    pub rows: usize,
    pub cols: usize,
    pub resolution: f64,
    pub origin: [f64; 2],
}

pub(crate) fn decode_geometry(r: &mut Reader<'_>) -> Result<Geometry> {
    let rows = r.u32("H")? as usize;
    let cols = r.u32("W")? as usize;
    let resolution = r.f64("resolution")?;
    let ox = r.f64("origin_x")?;
    let oy = r.f64("origin_y")?;
    if rows < 2 || cols < 2 {
        return Err(TntError::format(format!("bad dimensions {rows}x{cols}")));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(TntError::format(format!("bad resolution {resolution}")));
    }
    Ok(Geometry {
        rows,
        cols,
        resolution,
        origin: [ox, oy],
    })
}

pub fn encode_emap(map: &ElevationMap) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(EMAP_MAGIC).u16(EMAP_VERSION);
    encode_geometry(&mut w, map.rows(), map.cols(), map.resolution(), map.origin());
    w.f64s(map.heights());
    for &u in map.unknown_mask() {
        w.u8(u8::from(u));
    }
    w.finish()
}

pub fn decode_emap(data: &[u8]) -> Result<ElevationMap> {
    let mut r = Reader::new(data);
    r.magic(EMAP_MAGIC)?;
    r.version(EMAP_VERSION)?;
    let g = decode_geometry(&mut r)?;
    let n = g.rows * g.cols;
    if r.remaining() < n * 9 {
        return Err(TntError::format("short payload"));
    }
    let heights = r.f64s(n, "heights")?;
    let mask = r.take(n, "unknown mask")?;
    let mut unknown = Vec::with_capacity(n);
    for &b in mask {
        match b {
            0 => unknown.push(false),
            1 => unknown.push(true),
            other => return Err(TntError::format(format!("bad unknown-mask byte {other}"))),
        }
    }
    r.finish()?;
    ElevationMap::with_unknown(g.rows, g.cols, g.resolution, g.origin, heights, unknown)
}

pub fn write_emap(map: &ElevationMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_emap(map))?;
    Ok(())
}

pub fn read_emap(path: impl AsRef<Path>) -> Result<ElevationMap> {
    decode_emap(&fs::read(path)?)
}

/// Reads a hand-authored map: one grid row per line, comma separated heights.
/// Empty fields or `nan` mark unknown cells; `#` starts a comment line.
pub fn read_emap_csv(path: impl AsRef<Path>, resolution: f64, origin: [f64; 2]) -> Result<ElevationMap> {
    let text = fs::read_to_string(path)?;
    parse_emap_csv(&text, resolution, origin)
}

pub(crate) fn parse_emap_csv(text: &str, resolution: f64, origin: [f64; 2]) -> Result<ElevationMap> {
    let mut heights = Vec::new();
    let mut unknown = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(TntError::format(format!(
                    "line {}: expected {c} columns, got {}",
                    lineno + 1,
                    fields.len()
                )))
            }
            _ => {}
        }
        for f in fields {
            if f.is_empty() || f.eq_ignore_ascii_case("nan") {
                heights.push(f64::NAN);
                unknown.push(true);
            } else {
                let h: f64 = f
                    .parse()
                    .map_err(|_| TntError::format(format!("line {}: bad height '{f}'", lineno + 1)))?;
                heights.push(h);
                unknown.push(false);
            }
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| TntError::format("empty csv"))?;
    ElevationMap::with_unknown(rows, cols, resolution, origin, heights, unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{generate_terrain, MapDims, TerrainGenSpec};

    fn sample_map() -> ElevationMap {
        let dims = MapDims {
            rows: 20,
            cols: 12,
            resolution: 0.05,
        };
        generate_terrain(&TerrainGenSpec::boulder_field(), 9, dims).unwrap()
    }

    #[test]
    fn round_trip_is_identical() {
        let map = sample_map();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emap");
        write_emap(&map, &path).unwrap();
        let back = read_emap(&path).unwrap();
        assert_eq!(back, map);
        assert_eq!(encode_emap(&back), encode_emap(&map));
    }

    #[test]
    fn header_layout() {
        let map = ElevationMap::flat(2, 3, 0.5, 1.0).unwrap();
        let b = encode_emap(&map);
        assert_eq!(&b[0..4], b"EMAP");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(u32::from_le_bytes(b[6..10].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[10..14].try_into().unwrap()), 3);
        assert_eq!(b.len(), 4 + 2 + 8 + 24 + 6 * 8 + 6);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let mut b = encode_emap(&sample_map());
        b[0] = b'X';
        let err = decode_emap(&b).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let b = encode_emap(&sample_map());
        let err = decode_emap(&b[..b.len() - 7]).unwrap_err();
        assert!(err.to_string().contains("short payload"), "{err}");
    }

    #[test]
    fn csv_import_inpaints_holes() {
        let map = parse_emap_csv("# fixture\n0,0.1,0.2\n0.3,,0.5\n", 0.1, [0.0, 0.0]).unwrap();
        assert_eq!((map.rows(), map.cols()), (2, 3));
        // (1,1) has three neighbours at distance 1; (0,1) comes first.
        assert_eq!(map.at(1, 1), 0.1);
        assert!(map.unknown_mask()[4]);
        assert!(parse_emap_csv("1,2\n3\n", 0.1, [0.0, 0.0]).is_err());
    }
}
