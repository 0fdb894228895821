//! Subcommand implementations. Every product lands in the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tnt::bench::{
    aggregate, bench_scenarios, bench_seed, fit_regressor, label_terrain, render_elevation, render_traversability,
    run_benchmark, run_on_map, run_pipeline, run_scenario, runs_csv, summary_csv, summary_table, training_maps,
    trajectory_csv, Artifacts, PlannerVariant, RunMetrics, Scenario, TrajRow,
};
use tnt::dynamics::{collect_dataset, read_dataset, settle_pose, write_dataset, RecordKind, VehicleState};
use tnt::error::{Result, TntError};
use tnt::learn::{read_regressor, write_loss_csv, write_regressor, Regressor};
use tnt::plan::{astar_plan, edge_cost};
use tnt::seed;
use tnt::terrain::{generate_terrain, read_emap, write_emap, ElevationMap, MapDims};
use tnt::travmap::{
    build_label_map_strided, downsample, infer_map, pgm_bytes, read_encoder, read_tmap, train_encoder, write_encoder,
    write_tmap, CombineWeights, EncoderLoss, TraversabilityMap,
};

use crate::settings::Settings;

pub struct Ctx {
    pub settings: Settings,
    pub seed: u64,
    pub out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.path(name), bytes)?;
        println!("wrote {}", self.path(name).display());
        Ok(())
    }

    fn announce(&self, name: &str) {
        println!("wrote {}", self.path(name).display());
    }
}

/// Parses `x,y` or `x,y,yaw` (yaw in radians, default 0).
pub fn parse_point(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| TntError::spec(format!("cannot parse point '{s}'")))?;
    match v[..] {
        [x, y] => Ok([x, y, 0.0]),
        [x, y, yaw] => Ok([x, y, yaw]),
        _ => Err(TntError::spec(format!("expected x,y or x,y,yaw, got '{s}'"))),
    }
}

fn dims_of(map: &ElevationMap) -> MapDims {
    MapDims {
        rows: map.rows(),
        cols: map.cols(),
        resolution: map.resolution(),
    }
}

/// Combination weights, scaled by the regressors' target spreads when both
/// regressors are supplied.
fn weights(ctx: &Ctx, vel: Option<&Path>, pose: Option<&Path>) -> Result<CombineWeights> {
    let w = ctx.settings.pipeline.weights;
    match (vel, pose) {
        (Some(v), Some(p)) => w.normalized_by(&load_regressor(v, 2)?, &load_regressor(p, 4)?),
        (None, None) => Ok(w),
        _ => Err(TntError::spec("--vel and --pose must be given together")),
    }
}

fn load_regressor(path: &Path, k: usize) -> Result<Regressor> {
    let r = read_regressor(path)?;
    if r.k() != k {
        return Err(TntError::spec(format!(
            "{} holds a {}-target regressor, expected {k}",
            path.display(),
            r.k()
        )));
    }
    Ok(r)
}

fn encoder_loss_csv(history: &[EncoderLoss]) -> String {
    let mut s = String::from("epoch,train_l1\n");
    for r in history {
        let _ = writeln!(s, "{},{}", r.epoch, r.train_l1);
    }
    s
}

pub fn gen_terrain(ctx: &Ctx) -> Result<()> {
    let p = &ctx.settings.pipeline;
    for i in 0..ctx.settings.terrain_count {
        let map = generate_terrain(&p.terrain, seed::derive(ctx.seed, "gen-terrain", i as u64), p.dims)?;
        let name = format!("terrain_{i:03}.emap");
        write_emap(&map, ctx.path(&name))?;
        ctx.announce(&name);
        ctx.write(&format!("terrain_{i:03}.pgm"), pgm_bytes(map.rows(), map.cols(), map.heights())?)?;
    }
    Ok(())
}

pub fn collect(ctx: &Ctx, maps: &[PathBuf]) -> Result<()> {
    let p = &ctx.settings.pipeline;
    let maps = if maps.is_empty() {
        training_maps(p, ctx.seed)?
    } else {
        maps.iter().map(read_emap).collect::<Result<Vec<_>>>()?
    };
    let (dv, dq, stats) = collect_dataset(
        &maps,
        p.steps_per_map,
        &p.policy,
        &p.bench.geom,
        &p.bench.sim,
        &p.patch,
        seed::derive(ctx.seed, "collect", 0),
    )?;
    write_dataset(&dv, ctx.path("velocity.tntd"))?;
    ctx.announce("velocity.tntd");
    write_dataset(&dq, ctx.path("pose.tntd"))?;
    ctx.announce("pose.tntd");
    ctx.write("collect.txt", format!("{stats:#?}\n"))?;
    println!(
        "{} velocity records, {} pose records from {} steps",
        dv.len(),
        dq.len(),
        stats.steps
    );
    Ok(())
}

pub fn train_regressor(ctx: &Ctx, data: &Path, kind: RecordKind) -> Result<()> {
    let ds = read_dataset(data)?;
    if ds.kind() != kind {
        return Err(TntError::spec(format!("{} holds {:?} records, expected {kind:?}", data.display(), ds.kind())));
    }
    let mut p = ctx.settings.pipeline.clone();
    p.patch.patch_cells = ds.patch_cells();
    let (reg, history) = fit_regressor(&p, &ds, ctx.seed)?;
    let stem = match kind {
        RecordKind::Velocity => "velocity",
        RecordKind::Pose => "pose",
    };
    write_regressor(&reg, ctx.path(&format!("{stem}.tntm")))?;
    ctx.announce(&format!("{stem}.tntm"));
    write_loss_csv(&history, ctx.path(&format!("{stem}_loss.csv")))?;
    ctx.announce(&format!("{stem}_loss.csv"));
    if let Some(last) = history.last() {
        println!("epoch {}: train NLL {:.4}, validation NLL {:.4}", last.epoch, last.train_nll, last.val_nll);
    }
    Ok(())
}

pub fn build_labels(ctx: &Ctx, vel: &Path, pose: &Path, maps: &[PathBuf]) -> Result<()> {
    let p = &ctx.settings.pipeline;
    let v = load_regressor(vel, 2)?;
    let q = load_regressor(pose, 4)?;
    let w = p.weights.normalized_by(&v, &q)?;
    let generated = maps.is_empty();
    let maps = if generated {
        (0..p.label_maps)
            .map(|i| label_terrain(p, ctx.seed, i))
            .collect::<Result<Vec<_>>>()?
    } else {
        maps.iter().map(read_emap).collect::<Result<Vec<_>>>()?
    };
    for (i, map) in maps.iter().enumerate() {
        let t = Instant::now();
        let tm = build_label_map_strided(map, &p.patch, &p.bench.geom, &v, &q, &w, p.label_stride)?;
        println!("label map {i}: {:.2} s", t.elapsed().as_secs_f64());
        if generated {
            let name = format!("labels_{i:03}.emap");
            write_emap(map, ctx.path(&name))?;
            ctx.announce(&name);
        }
        let name = format!("labels_{i:03}.tmap");
        write_tmap(&tm, ctx.path(&name))?;
        ctx.announce(&name);
        ctx.write(&format!("labels_{i:03}.ppm"), render_traversability(&tm, &[])?)?;
    }
    Ok(())
}

pub fn train_encoder_cmd(ctx: &Ctx, maps: &[PathBuf], labels: &[PathBuf]) -> Result<()> {
    if maps.len() != labels.len() || maps.is_empty() {
        return Err(TntError::spec("--maps and --labels need the same, non-zero number of files"));
    }
    let pairs = maps
        .iter()
        .zip(labels)
        .map(|(m, l)| Ok((read_emap(m)?, read_tmap(l)?)))
        .collect::<Result<Vec<_>>>()?;
    let p = &ctx.settings.pipeline;
    let cfg = tnt::travmap::EncoderConfig {
        seed: seed::derive(ctx.seed, "train-encoder", 0),
        ..p.encoder.clone()
    };
    let (enc, history) = train_encoder(&pairs, &p.patch, &cfg)?;
    write_encoder(&enc, ctx.path("encoder.tntm"))?;
    ctx.announce("encoder.tntm");
    ctx.write("encoder_loss.csv", encoder_loss_csv(&history))?;
    if let Some(last) = history.last() {
        println!("epoch {}: train L1 {:.5}", last.epoch, last.train_l1);
    }
    Ok(())
}

pub fn infer(ctx: &Ctx, encoder: &Path, map: &Path, vel: Option<&Path>, pose: Option<&Path>) -> Result<()> {
    let enc = read_encoder(encoder)?;
    let map = read_emap(map)?;
    let w = weights(ctx, vel, pose)?;
    let t = Instant::now();
    let tm = infer_map(&enc, &map, &w)?;
    println!("inferred {}x{} map in {:.1} ms", tm.rows(), tm.cols(), 1e3 * t.elapsed().as_secs_f64());
    write_tmap(&tm, ctx.path("tm.tmap"))?;
    ctx.announce("tm.tmap");
    ctx.write("tm.ppm", render_traversability(&tm, &[])?)
}

pub fn plan_astar(ctx: &Ctx, tmap: &Path, map: Option<&Path>, start: [f64; 3], goal: [f64; 3]) -> Result<()> {
    let b = &ctx.settings.pipeline.bench;
    let tm = read_tmap(tmap)?;
    let elevation = map.map(read_emap).transpose()?;
    let grid = downsample(&tm, b.astar_grid.0.min(tm.rows()), b.astar_grid.1.min(tm.cols()))?;
    let inside = |p: [f64; 3]| tm.nearest_cell(p[0], p[1]).is_some();
    if !inside(start) || !inside(goal) {
        return Err(TntError::spec("start and goal must lie on the traversability map"));
    }
    let path = astar_plan(&grid, grid.cell_of(start[0], start[1]), grid.cell_of(goal[0], goal[1]), b.astar_beta)?;
    let mut rows = Vec::with_capacity(path.cells.len());
    let mut cost = 0.0;
    for (i, (&cell, &wp)) in path.cells.iter().zip(&path.waypoints).enumerate() {
        if i > 0 {
            let prev = path.cells[i - 1];
            let step = if prev.0 != cell.0 && prev.1 != cell.1 { std::f64::consts::SQRT_2 } else { 1.0 };
            cost += edge_cost(step, grid.cost(cell.0, cell.1), b.astar_beta).unwrap_or(f64::INFINITY);
        }
        let next = path.waypoints.get(i + 1).copied().unwrap_or(wp);
        let prev = if i > 0 { path.waypoints[i - 1] } else { wp };
        let yaw = if next != wp { (next[1] - wp[1]).atan2(next[0] - wp[0]) } else { (wp[1] - prev[1]).atan2(wp[0] - prev[0]) };
        let mut state = VehicleState::at(wp[0], wp[1], yaw);
        if let Some(m) = &elevation {
            if let Ok(p) = settle_pose(m, wp[0], wp[1], yaw, &b.geom) {
                state.z = p.z;
                state.roll = p.roll;
                state.pitch = p.pitch;
            }
        }
        rows.push(TrajRow { step: i, state, cost });
    }
    ctx.write("path.csv", trajectory_csv(&rows))?;
    ctx.write("path.ppm", render_traversability(&tm, &path.waypoints)?)?;
    println!("{} waypoints, path cost {:.4}", path.cells.len(), path.cost);
    Ok(())
}

fn summary_line(m: &RunMetrics) -> String {
    format!(
        "planner={} success={} failure={} time={:.2} steps={} mean_abs_roll_deg={:.3} mean_abs_pitch_deg={:.3} \
mean_abs_droll_deg={:.4} mean_abs_dpitch_deg={:.4} mean_abs_dv={:.4} mean_abs_domega={:.4}\n",
        m.variant.name(),
        m.success,
        m.failure.name(),
        m.time,
        m.steps,
        m.mean_abs_roll,
        m.mean_abs_pitch,
        m.mean_abs_droll,
        m.mean_abs_dpitch,
        m.mean_abs_dv_cmd,
        m.mean_abs_domega_cmd
    )
}

fn path_of(rows: &[TrajRow]) -> Vec<[f64; 2]> {
    rows.iter().map(|r| [r.state.x, r.state.y]).collect()
}

#[allow(clippy::too_many_arguments)]
pub fn plan_mppi(
    ctx: &Ctx,
    map: &Path,
    planner: PlannerVariant,
    encoder: Option<&Path>,
    vel: Option<&Path>,
    pose: Option<&Path>,
    start: [f64; 3],
    goal: [f64; 3],
) -> Result<()> {
    let p = &ctx.settings.pipeline;
    let elevation = read_emap(map)?;
    let artifacts = match encoder {
        Some(e) => Some(Artifacts {
            encoder: read_encoder(e)?,
            weights: weights(ctx, vel, pose)?,
        }),
        None => None,
    };
    let sc = Scenario {
        id: 0,
        terrain: p.terrain.clone(),
        terrain_seed: 0,
        dims: dims_of(&elevation),
        start,
        goal: [goal[0], goal[1]],
        time_limit: ctx.settings.pipeline.time_limit,
        success_radius: ctx.settings.pipeline.success_radius,
    };
    let (m, rows) = run_on_map(&elevation, &sc, planner, artifacts.as_ref(), &p.bench, ctx.seed)?;
    ctx.write("trajectory.csv", trajectory_csv(&rows))?;
    let image = match &artifacts {
        Some(a) => render_traversability(&infer_map(&a.encoder, &elevation, &a.weights)?, &path_of(&rows))?,
        None => render_elevation(&elevation, &path_of(&rows))?,
    };
    ctx.write("trajectory.ppm", image)?;
    let line = summary_line(&m);
    ctx.write("run.txt", &line)?;
    print!("{line}");
    Ok(())
}

fn write_bench_outputs(
    ctx: &Ctx,
    scenarios: &[Scenario],
    runs: &[RunMetrics],
    artifacts: Option<&Artifacts>,
) -> Result<()> {
    let summaries = aggregate(runs);
    ctx.write("summary.csv", summary_csv(&summaries))?;
    let table = summary_table(&summaries);
    ctx.write("summary.txt", &table)?;
    ctx.write("runs.csv", runs_csv(runs))?;
    // Trajectories of every planner on the first scenario, for inspection.
    if let Some(sc) = scenarios.first() {
        let map = sc.terrain_map()?;
        let tm: Option<TraversabilityMap> = artifacts.map(|a| infer_map(&a.encoder, &map, &a.weights)).transpose()?;
        let mut all = Vec::new();
        for &v in &ctx.settings.pipeline.variants {
            let (_, rows) = run_scenario(sc, v, artifacts, &ctx.settings.pipeline.bench, bench_seed(ctx.seed))?;
            ctx.write(&format!("trajectory_000_{}.csv", v.name()), trajectory_csv(&rows))?;
            all.extend(path_of(&rows));
        }
        let image = match &tm {
            Some(tm) => render_traversability(tm, &all)?,
            None => render_elevation(&map, &all)?,
        };
        ctx.write("bench.ppm", image)?;
    }
    print!("{table}");
    Ok(())
}

pub fn bench(ctx: &Ctx, encoder: Option<&Path>, vel: Option<&Path>, pose: Option<&Path>) -> Result<()> {
    let p = &ctx.settings.pipeline;
    let artifacts = match encoder {
        Some(e) => Some(Artifacts {
            encoder: read_encoder(e)?,
            weights: weights(ctx, vel, pose)?,
        }),
        None if vel.is_some() || pose.is_some() => {
            return Err(TntError::spec("--vel/--pose only apply together with --encoder"))
        }
        None => None,
    };
    if artifacts.is_some() || !p.variants.iter().any(|v| v.needs_map()) {
        let scenarios = bench_scenarios(p, ctx.seed)?;
        let runs = run_benchmark(&scenarios, &p.variants, artifacts.as_ref(), &p.bench, bench_seed(ctx.seed))?;
        return write_bench_outputs(ctx, &scenarios, &runs, artifacts.as_ref());
    }
    // No encoder given: train everything from the seed first.
    let t = Instant::now();
    let out = run_pipeline(p, ctx.seed)?;
    println!("pipeline finished in {:.1} s", t.elapsed().as_secs_f64());
    write_regressor(&out.velocity, ctx.path("velocity.tntm"))?;
    ctx.announce("velocity.tntm");
    write_regressor(&out.pose, ctx.path("pose.tntm"))?;
    ctx.announce("pose.tntm");
    write_loss_csv(&out.velocity_losses, ctx.path("velocity_loss.csv"))?;
    ctx.announce("velocity_loss.csv");
    write_loss_csv(&out.pose_losses, ctx.path("pose_loss.csv"))?;
    ctx.announce("pose_loss.csv");
    write_encoder(&out.encoder, ctx.path("encoder.tntm"))?;
    ctx.announce("encoder.tntm");
    ctx.write("encoder_loss.csv", encoder_loss_csv(&out.encoder_losses))?;
    let artifacts = Artifacts {
        encoder: out.encoder,
        weights: out.weights,
    };
    write_bench_outputs(ctx, &out.scenarios, &out.runs, Some(&artifacts))
}

pub fn render(ctx: &Ctx, map: Option<&Path>, tmap: Option<&Path>, path: Option<&Path>) -> Result<()> {
    let points = match path {
        Some(p) => read_path_csv(p)?,
        None => Vec::new(),
    };
    let image = match (map, tmap) {
        (Some(m), None) => render_elevation(&read_emap(m)?, &points)?,
        (None, Some(t)) => render_traversability(&read_tmap(t)?, &points)?,
        _ => return Err(TntError::spec("give exactly one of --map or --tmap")),
    };
    ctx.write("render.ppm", image)
}

/// x and y columns of a trajectory CSV.
fn read_path_csv(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| TntError::format(format!("{}: no '{name}' column", path.display())))
    };
    let (ix, iy) = (col("x")?, col("y")?);
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let get = |j: usize| {
                f.get(j)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| TntError::format(format!("{}: bad row {}", path.display(), i + 2)))
            };
            Ok([get(ix)?, get(iy)?])
        })
        .collect()
}
