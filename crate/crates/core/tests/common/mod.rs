#![allow(dead_code)]

use tnt::dynamics::{collect_dataset, CollectStats, Dataset, ExplorationPolicy, SimParams, VehicleGeometry};
use tnt::terrain::{generate_terrain, ElevationMap, MapDims, PatchSpec, TerrainGenSpec, TerrainKind};

pub fn small_dims() -> MapDims {
    MapDims {
        rows: 96,
        cols: 80,
        resolution: 0.025,
    }
}

/// Half flat, half boulder maps so the learners see both regimes.
pub fn mixed_maps(count: usize, seed: u64, dims: MapDims) -> Vec<ElevationMap> {
    (0..count)
        .map(|i| {
            let spec = if i % 2 == 0 {
                TerrainGenSpec::boulder_field()
            } else {
                TerrainGenSpec::boulder_field().with_kind(TerrainKind::Flat)
            };
            generate_terrain(&spec, seed * 1000 + i as u64, dims).unwrap()
        })
        .collect()
}

pub fn collect(maps: &[ElevationMap], steps: usize, seed: u64) -> (Dataset, Dataset, CollectStats) {
    collect_dataset(
        maps,
        steps,
        &ExplorationPolicy::default(),
        &VehicleGeometry::default(),
        &SimParams::default(),
        &PatchSpec::default(),
        seed,
    )
    .unwrap()
}
