//! Maps configuration keys onto library settings.

use tnt::bench::{PipelineConfig, PlannerVariant};
use tnt::config::Config;
use tnt::error::{Result, TntError};
use tnt::learn::{Activation, OptimizerKind};
use tnt::plan::{FieldParams, MaskMode};
use tnt::terrain::{PatchSpec, TerrainKind};
use tnt::travmap::CombineWeights;

/// Everything a subcommand may need, after defaults and overrides.
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub terrain_count: usize,
}

fn array<const N: usize>(cfg: &Config, key: &str, target: &mut [f64; N]) -> Result<()> {
    if let Some(v) = cfg.get_list::<f64>(key)? {
        *target = v
            .try_into()
            .map_err(|v: Vec<f64>| TntError::spec(format!("config key '{key}': expected {N} values, got {}", v.len())))?;
    }
    Ok(())
}

/// Reads every known key; keys nobody recognizes are a specification error.
pub fn load(cfg: &Config) -> Result<Settings> {
    let mut p = PipelineConfig::default();

    cfg.set("map.rows", &mut p.dims.rows)?;
    cfg.set("map.cols", &mut p.dims.cols)?;
    cfg.set("map.resolution", &mut p.dims.resolution)?;

    if let Some(kind) = cfg.get::<TerrainKind>("terrain.kind")? {
        p.terrain.kind = kind;
    }
    cfg.set("terrain.base", &mut p.terrain.base)?;
    cfg.set("terrain.max_height", &mut p.terrain.max_height)?;
    cfg.set("terrain.boulder_count_min", &mut p.terrain.boulder_count.0)?;
    cfg.set("terrain.boulder_count_max", &mut p.terrain.boulder_count.1)?;
    cfg.set("terrain.boulder_height_min", &mut p.terrain.boulder_height.0)?;
    cfg.set("terrain.boulder_height_max", &mut p.terrain.boulder_height.1)?;
    cfg.set("terrain.boulder_radius_min", &mut p.terrain.boulder_radius.0)?;
    cfg.set("terrain.boulder_radius_max", &mut p.terrain.boulder_radius.1)?;
    let terrain_count = cfg.get_or("terrain.count", 1)?;

    cfg.set("patch.cells", &mut p.patch.patch_cells)?;
    if let Some(deg) = cfg.get_list::<f64>("patch.angles_deg")? {
        p.patch = PatchSpec::new(p.patch.patch_cells, deg.iter().map(|d| d.to_radians()).collect())?;
    }

    cfg.set("collect.maps", &mut p.train_maps)?;
    cfg.set("collect.steps", &mut p.steps_per_map)?;
    cfg.set("collect.v_mean", &mut p.policy.v_mean)?;
    cfg.set("collect.window_stride", &mut p.policy.window_stride)?;

    cfg.set("sim.dt", &mut p.bench.sim.dt)?;
    cfg.set("sim.slip_gain", &mut p.bench.sim.slip_gain)?;
    cfg.set("sim.roughness_gain", &mut p.bench.sim.roughness_gain)?;
    cfg.set("sim.actuation_tau", &mut p.bench.sim.actuation_tau)?;
    cfg.set("sim.stuck_slope", &mut p.bench.sim.stuck_slope)?;
    cfg.set("sim.horizon", &mut p.bench.sim.horizon)?;
    if let Some(deg) = cfg.get::<f64>("sim.rollover_deg")? {
        p.bench.sim.rollover = deg.to_radians();
    }

    cfg.set("train.lr", &mut p.train.lr)?;
    cfg.set("train.batch", &mut p.train.batch)?;
    cfg.set("train.epochs", &mut p.train.epochs)?;
    cfg.set("train.val_fraction", &mut p.train.val_fraction)?;
    if let Some(o) = cfg.get::<OptimizerKind>("train.optimizer")? {
        p.train.optimizer = o;
    }
    if let Some(h) = cfg.get_list::<usize>("train.hidden")? {
        p.hidden = h;
    }
    if let Some(a) = cfg.get::<Activation>("train.activation")? {
        p.activation = a;
    }

    cfg.set("labels.maps", &mut p.label_maps)?;
    cfg.set("labels.stride", &mut p.label_stride)?;
    let mut w = CombineWeights::default();
    array(cfg, "weights.w1", &mut w.w1)?;
    array(cfg, "weights.w2", &mut w.w2)?;
    array(cfg, "weights.w3", &mut w.w3)?;
    w.validate()?;
    p.weights = w;

    cfg.set("encoder.pool", &mut p.encoder.pool)?;
    cfg.set("encoder.radius", &mut p.encoder.radius)?;
    cfg.set("encoder.lr", &mut p.encoder.lr)?;
    cfg.set("encoder.epochs", &mut p.encoder.epochs)?;
    if let Some(h) = cfg.get_list::<usize>("encoder.hidden")? {
        p.encoder.hidden = h;
    }

    let m = &mut p.bench.mppi;
    cfg.set("mppi.horizon", &mut m.horizon)?;
    cfg.set("mppi.samples", &mut m.samples)?;
    cfg.set("mppi.lambda", &mut m.lambda)?;
    cfg.set("mppi.noise_v", &mut m.noise_v)?;
    cfg.set("mppi.noise_omega", &mut m.noise_omega)?;
    if let Some(t) = cfg.get::<f64>("mppi.threshold")? {
        m.threshold = Some(t);
    }
    if let Some(mode) = cfg.get::<MaskMode>("mppi.mask")? {
        m.mask = mode;
    }
    cfg.set("mppi.soft_penalty", &mut m.soft_penalty)?;
    cfg.set("mppi.soft_fallback", &mut m.soft_fallback)?;
    cfg.set("mppi.goal_terminal", &mut m.weights.goal_terminal)?;
    cfg.set("mppi.goal_running", &mut m.weights.goal_running)?;
    cfg.set("mppi.traversability_weight", &mut m.weights.traversability)?;
    cfg.set("mppi.effort_weight", &mut m.weights.effort)?;
    cfg.set("mppi.rollover_weight", &mut m.weights.rollover)?;
    cfg.set("mppi.stability_weight", &mut m.weights.stability)?;
    if let Some(deg) = cfg.get::<f64>("mppi.rollover_deg")? {
        m.rollover_angle = deg.to_radians();
    }
    m.dt = p.bench.sim.dt;
    m.validate()?;

    let mut field = FieldParams::default();
    cfg.set("mppi.field_beta", &mut field.beta)?;
    cfg.set("mppi.field_mask_factor", &mut field.mask_factor)?;
    p.bench.field = if cfg.get_or("mppi.cost_to_go", true)? { Some(field) } else { None };

    cfg.set("bench.scenarios", &mut p.scenarios)?;
    cfg.set("bench.infer_every", &mut p.bench.infer_every)?;
    cfg.set("bench.stuck_window", &mut p.bench.stuck_window)?;
    cfg.set("bench.stuck_distance", &mut p.bench.stuck_distance)?;
    if let Some(v) = cfg.get_list::<PlannerVariant>("bench.planners")? {
        p.variants = v;
    }
    cfg.set("bench.time_limit", &mut p.time_limit)?;
    cfg.set("bench.success_radius", &mut p.success_radius)?;

    cfg.set("astar.grid_rows", &mut p.bench.astar_grid.0)?;
    cfg.set("astar.grid_cols", &mut p.bench.astar_grid.1)?;
    cfg.set("astar.beta", &mut p.bench.astar_beta)?;
    cfg.set("tracker.lookahead", &mut p.bench.tracker.lookahead)?;
    cfg.set("tracker.cruise", &mut p.bench.tracker.cruise)?;

    cfg.reject_unused()?;
    p.terrain.validate()?;
    p.patch.validate()?;
    p.train.validate()?;
    p.encoder.validate()?;
    p.bench.sim.validate()?;
    if p.dims.rows < 2 || p.dims.cols < 2 || !(p.dims.resolution > 0.0) {
        return Err(TntError::spec("map dimensions must be at least 2x2 with positive resolution"));
    }
    Ok(Settings {
        pipeline: p,
        terrain_count,
    })
}
