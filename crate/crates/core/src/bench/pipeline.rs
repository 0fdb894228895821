//! Whole workflow from one master seed: terrain, data collection, regressor
//! training, label maps, encoder training, and the planner benchmark.

use rayon::prelude::*;

use super::aggregate::{aggregate, summary_csv, PlannerSummary};
use super::scenario::{run_scenario, scenario_suite, Artifacts, BenchConfig, PlannerVariant, RunMetrics, Scenario};
use crate::dynamics::{collect_dataset, CollectStats, Dataset, ExplorationPolicy, RecordKind};
use crate::error::Result;
use crate::learn::{regressor_arch, Activation, regressor_init, train, LossRecord, Regressor, TrainConfig};
use crate::seed;
use crate::terrain::{generate_terrain, ElevationMap, MapDims, PatchSpec, TerrainGenSpec, TerrainKind};
use crate::travmap::{
    build_label_map_strided, decode_tmap, encode_tmap, train_encoder, CombineWeights, EncoderConfig, EncoderLoss, MapEncoder, TraversabilityMap,
    DEFAULT_LABEL_STRIDE,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dims: MapDims,
    pub terrain: TerrainGenSpec,
    /// Maps driven for data collection; every other one is flat.
    pub train_maps: usize,
    pub steps_per_map: usize,
    /// Boulder maps labeled to train the encoder.
    pub label_maps: usize,
    pub label_stride: usize,
    pub patch: PatchSpec,
    pub policy: ExplorationPolicy,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub train: TrainConfig,
    pub encoder: EncoderConfig,
    pub weights: CombineWeights,
    pub scenarios: usize,
    /// Per-scenario time limit (seconds) and goal radius (meters).
    pub time_limit: f64,
    pub success_radius: f64,
    pub variants: Vec<PlannerVariant>,
    pub bench: BenchConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dims: MapDims::default(),
            terrain: TerrainGenSpec::boulder_field(),
            train_maps: 24,
            steps_per_map: 1500,
            label_maps: 16,
            label_stride: DEFAULT_LABEL_STRIDE,
            patch: PatchSpec::default(),
            policy: ExplorationPolicy::default(),
            hidden: vec![64, 32],
            activation: Activation::Tanh,
            train: TrainConfig::default(),
            encoder: EncoderConfig::default(),
            weights: CombineWeights::default(),
            scenarios: 20,
            time_limit: 30.0,
            success_radius: 0.2,
            variants: PlannerVariant::BENCH.to_vec(),
            bench: BenchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub collect_stats: CollectStats,
    pub velocity: Regressor,
    pub pose: Regressor,
    pub velocity_losses: Vec<LossRecord>,
    pub pose_losses: Vec<LossRecord>,
    pub label_maps: Vec<(ElevationMap, TraversabilityMap)>,
    pub encoder: MapEncoder,
    pub encoder_losses: Vec<EncoderLoss>,
    /// Weights normalized by the regressor target scales.
    pub weights: CombineWeights,
    pub scenarios: Vec<Scenario>,
    pub runs: Vec<RunMetrics>,
    pub summaries: Vec<PlannerSummary>,
    pub summary_csv: String,
}

/// Training maps alternate boulder field and flat ground.
pub fn training_maps(cfg: &PipelineConfig, master_seed: u64) -> Result<Vec<ElevationMap>> {
    (0..cfg.train_maps)
        .map(|i| {
            let spec = if i % 2 == 0 {
                cfg.terrain.clone()
            } else {
                cfg.terrain.clone().with_kind(TerrainKind::Flat)
            };
            generate_terrain(&spec, seed::derive(master_seed, "train-terrain", i as u64), cfg.dims)
        })
        .collect()
}

/// Initializes and trains the regressor matching `ds`'s record kind.
pub fn fit_regressor(cfg: &PipelineConfig, ds: &Dataset, master_seed: u64) -> Result<(Regressor, Vec<LossRecord>)> {
    let label = match ds.kind() {
        RecordKind::Velocity => "train-velocity",
        RecordKind::Pose => "train-pose",
    };
    let k = ds.target_len();
    let mut arch = regressor_arch(cfg.patch.patch_cells, &cfg.hidden, k);
    arch.activation = cfg.activation;
    let init = regressor_init(&arch, k, seed::derive(master_seed, label, 0))?;
    let tc = TrainConfig {
        seed: seed::derive(master_seed, label, 1),
        ..cfg.train.clone()
    };
    train(&init, ds, &tc)
}

/// Boulder maps for encoder training and their label maps.
pub fn label_terrain(cfg: &PipelineConfig, master_seed: u64, i: usize) -> Result<ElevationMap> {
    generate_terrain(&cfg.terrain, seed::derive(master_seed, "label-terrain", i as u64), cfg.dims)
}

/// The benchmark scenarios of a master seed.
pub fn bench_scenarios(cfg: &PipelineConfig, master_seed: u64) -> Result<Vec<Scenario>> {
    let mut scs = scenario_suite(cfg.scenarios, seed::derive(master_seed, "scenarios", 0), cfg.dims, &cfg.terrain)?;
    for s in &mut scs {
        s.time_limit = cfg.time_limit;
        s.success_radius = cfg.success_radius;
    }
    Ok(scs)
}

/// Seed the benchmark runs derive their rng streams from.
pub fn bench_seed(master_seed: u64) -> u64 {
    seed::derive(master_seed, "bench", 0)
}

pub fn run_pipeline(cfg: &PipelineConfig, master_seed: u64) -> Result<PipelineOutput> {
    let maps = training_maps(cfg, master_seed)?;
    let (dv, dq, collect_stats) = collect_dataset(
        &maps,
        cfg.steps_per_map,
        &cfg.policy,
        &cfg.bench.geom,
        &cfg.bench.sim,
        &cfg.patch,
        seed::derive(master_seed, "collect", 0),
    )?;

    let (velocity, velocity_losses) = fit_regressor(cfg, &dv, master_seed)?;
    let (pose, pose_losses) = fit_regressor(cfg, &dq, master_seed)?;
    let weights = cfg.weights.normalized_by(&velocity, &pose)?;

    let label_maps = (0..cfg.label_maps)
        .map(|i| -> Result<(ElevationMap, TraversabilityMap)> {
            let map = label_terrain(cfg, master_seed, i)?;
            let tm = build_label_map_strided(
                &map,
                &cfg.patch,
                &cfg.bench.geom,
                &velocity,
                &pose,
                &weights,
                cfg.label_stride,
            )?;
            // Train on labels as they would be read back from TMAP files.
            Ok((map, decode_tmap(&encode_tmap(&tm))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let enc_cfg = EncoderConfig {
        seed: seed::derive(master_seed, "train-encoder", 0),
        ..cfg.encoder.clone()
    };
    let (encoder, encoder_losses) = train_encoder(&label_maps, &cfg.patch, &enc_cfg)?;

    let scenarios = bench_scenarios(cfg, master_seed)?;
    let artifacts = Artifacts {
        encoder: encoder.clone(),
        weights,
    };
    let runs = run_benchmark(&scenarios, &cfg.variants, Some(&artifacts), &cfg.bench, bench_seed(master_seed))?;
    let summaries = aggregate(&runs);
    let summary_csv = summary_csv(&summaries);
    Ok(PipelineOutput {
        collect_stats,
        velocity,
        pose,
        velocity_losses,
        pose_losses,
        label_maps,
        encoder,
        encoder_losses,
        weights,
        scenarios,
        runs,
        summaries,
        summary_csv,
    })
}

/// Every variant on every scenario; runs are independent and execute in
/// parallel, results come back ordered by scenario then variant.
pub fn run_benchmark(
    scenarios: &[Scenario],
    variants: &[PlannerVariant],
    artifacts: Option<&Artifacts>,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<Vec<RunMetrics>> {
    let jobs: Vec<(&Scenario, PlannerVariant)> =
        scenarios.iter().flat_map(|s| variants.iter().map(move |&v| (s, v))).collect();
    jobs.par_iter()
        .map(|&(sc, v)| run_scenario(sc, v, artifacts, cfg, seed).map(|(m, _)| m))
        .collect()
}
