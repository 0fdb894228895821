//! Closed-loop scenario runs.

use std::fmt::Write as _;

use crate::dynamics::{
    footprint_variance, settle_pose, simulate_step, Command, SimParams, VehicleGeometry, VehicleState,
};
use crate::error::{Result, TntError};
use crate::plan::{
    astar_plan, default_threshold, mppi_plan, track_path, FieldParams, GoalField, MppiConfig, PlanContext, TrackerGains,
};
use crate::seed;
use crate::terrain::{generate_terrain, ElevationMap, MapDims, TerrainGenSpec};
use crate::travmap::{downsample, infer_map, CombineWeights, MapEncoder, TraversabilityMap};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: usize,
    pub terrain: TerrainGenSpec,
    pub terrain_seed: u64,
    pub dims: MapDims,
    /// `(x, y, yaw)`.
    pub start: [f64; 3],
    pub goal: [f64; 2],
    pub time_limit: f64,
    pub success_radius: f64,
}

impl Scenario {
    pub fn terrain_map(&self) -> Result<ElevationMap> {
        generate_terrain(&self.terrain, self.terrain_seed, self.dims)
    }

    pub fn validate(&self, map: &ElevationMap) -> Result<()> {
        if !(self.time_limit > 0.0) || !(self.success_radius > 0.0) {
            return Err(TntError::spec("time limit and success radius must be positive"));
        }
        for (x, y) in [(self.start[0], self.start[1]), (self.goal[0], self.goal[1])] {
            map.height_at(x, y)
                .map_err(|_| TntError::spec(format!("scenario point ({x}, {y}) is outside the map")))?;
        }
        Ok(())
    }
}

/// Boulder-field courses running along the long axis of the map, with both
/// ends kept clear of the unmapped border of the traversability map. Start and
/// goal lateral positions are picked among a few candidates as the ones with
/// the smoothest footprint, so no run starts on top of a rock.
pub fn scenario_suite(count: usize, master_seed: u64, dims: MapDims, terrain: &TerrainGenSpec) -> Result<Vec<Scenario>> {
    use rand::Rng;
    let ext_x = (dims.rows - 1) as f64 * dims.resolution;
    let ext_y = (dims.cols - 1) as f64 * dims.resolution;
    let margin = 0.75;
    if ext_x < 4.0 * margin || ext_y < 2.0 * margin + 0.2 {
        return Err(TntError::spec("map too small for benchmark scenarios"));
    }
    (0..count)
        .map(|id| {
            let terrain_seed = seed::derive(master_seed, "scenario-terrain", id as u64);
            let sc = Scenario {
                id,
                terrain: terrain.clone(),
                terrain_seed,
                dims,
                start: [margin, 0.0, 0.0],
                goal: [ext_x - margin, 0.0],
                time_limit: 30.0,
                success_radius: 0.2,
            };
            let map = sc.terrain_map()?;
            let mut rng = seed::child_rng(master_seed, "scenario-ends", id as u64);
            let mut pick = |x: f64| {
                (0..8)
                    .map(|_| rng.gen_range(margin..=ext_y - margin))
                    .min_by(|&a, &b| {
                        footprint_variance(&map, x, a, 0.0, 17).total_cmp(&footprint_variance(&map, x, b, 0.0, 17))
                    })
                    .expect("eight candidates")
            };
            let sy = pick(sc.start[0]);
            let gy = pick(sc.goal[0]);
            Ok(Scenario {
                start: [sc.start[0], sy, (gy - sy).atan2(sc.goal[0] - sc.start[0])],
                goal: [sc.goal[0], gy],
                ..sc
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerVariant {
    /// Short-horizon MPPI masked and costed by the inferred traversability map.
    Tnt,
    /// Long-horizon, low-sample MPPI without the map.
    TalLike,
    /// MPPI costing the predicted roll and pitch of every step, without the map.
    WmvctLike,
    /// A* on the pooled traversability grid, followed by pure pursuit.
    AstarTracker,
}

impl PlannerVariant {
    pub const BENCH: [PlannerVariant; 3] = [Self::Tnt, Self::TalLike, Self::WmvctLike];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tnt => "tnt",
            Self::TalLike => "tal_like",
            Self::WmvctLike => "wmvct_like",
            Self::AstarTracker => "astar",
        }
    }

    pub fn needs_map(self) -> bool {
        matches!(self, Self::Tnt | Self::AstarTracker)
    }

    /// Planner settings for this variant on top of `base`.
    pub fn mppi_config(self, base: &MppiConfig) -> MppiConfig {
        let mut c = base.clone();
        match self {
            Self::Tnt | Self::AstarTracker => {
                c.guided = true;
            }
            Self::TalLike => {
                c.guided = false;
                c.horizon = 25;
                c.samples = (base.samples / 4).max(2);
            }
            Self::WmvctLike => {
                c.guided = false;
                c.weights.stability = 5.0;
            }
        }
        c
    }
}

impl std::str::FromStr for PlannerVariant {
    type Err = TntError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tnt" => Ok(Self::Tnt),
            "tal_like" | "tal" => Ok(Self::TalLike),
            "wmvct_like" | "wmvct" => Ok(Self::WmvctLike),
            "astar" => Ok(Self::AstarTracker),
            other => Err(TntError::spec(format!("unknown planner '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    None,
    Rollover,
    Stuck,
    Timeout,
    /// The vehicle drove off the map.
    OutOfMap,
}

impl FailureKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Rollover => "rollover",
            Self::Stuck => "stuck",
            Self::Timeout => "timeout",
            Self::OutOfMap => "out_of_map",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scenario: usize,
    pub variant: PlannerVariant,
    pub success: bool,
    /// Seconds until success or termination.
    pub time: f64,
    pub steps: usize,
    /// Degrees.
    pub mean_abs_roll: f64,
    pub mean_abs_pitch: f64,
    /// Degrees per step.
    pub mean_abs_droll: f64,
    pub mean_abs_dpitch: f64,
    /// m/s and rad/s per step.
    pub mean_abs_dv_cmd: f64,
    pub mean_abs_domega_cmd: f64,
    pub failure: FailureKind,
}

/// One logged control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajRow {
    pub step: usize,
    pub state: VehicleState,
    /// Planner objective of the step (MPPI: lowest sample cost; A*: path cost).
    pub cost: f64,
}

pub fn trajectory_csv(rows: &[TrajRow]) -> String {
    let mut s = String::from("step,x,y,z,roll,pitch,yaw,v,omega,cost\n");
    for r in rows {
        let st = &r.state;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step, st.x, st.y, st.z, st.roll, st.pitch, st.yaw, st.v, st.omega, r.cost
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sim: SimParams,
    pub geom: VehicleGeometry,
    pub mppi: MppiConfig,
    pub tracker: TrackerGains,
    /// Re-infer the traversability map every this many control steps.
    pub infer_every: usize,
    pub stuck_window: f64,
    pub stuck_distance: f64,
    /// A* grid size and traversability weight.
    pub astar_grid: (usize, usize),
    pub astar_beta: f64,
    /// Cost-to-go used by the guided planner; `None` keeps straight-line
    /// goal distances.
    pub field: Option<FieldParams>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sim: SimParams::default(),
            geom: VehicleGeometry::default(),
            mppi: MppiConfig::default(),
            tracker: TrackerGains::default(),
            infer_every: 10,
            stuck_window: 3.0,
            stuck_distance: 0.05,
            astar_grid: (31, 25),
            astar_beta: 1.0,
            field: Some(FieldParams::default()),
        }
    }
}

/// Trained pieces the guided planners need.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub encoder: MapEncoder,
    pub weights: CombineWeights,
}

fn settle_start(map: &ElevationMap, sc: &Scenario, geom: &VehicleGeometry) -> Result<VehicleState> {
    let [x, y, yaw] = sc.start;
    let p = settle_pose(map, x, y, yaw, geom)?;
    Ok(VehicleState {
        z: p.z,
        roll: p.roll,
        pitch: p.pitch,
        ..VehicleState::at(x, y, yaw)
    })
}

/// Runs one scenario to success or failure. Planner and simulator draw from
/// separate rng streams derived from `seed` and the scenario id, so every
/// variant faces the same simulator noise sequence.
pub fn run_scenario(
    sc: &Scenario,
    variant: PlannerVariant,
    artifacts: Option<&Artifacts>,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<(RunMetrics, Vec<TrajRow>)> {
    let map = sc.terrain_map()?;
    run_on_map(&map, sc, variant, artifacts, cfg, seed)
}

pub fn run_on_map(
    map: &ElevationMap,
    sc: &Scenario,
    variant: PlannerVariant,
    artifacts: Option<&Artifacts>,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<(RunMetrics, Vec<TrajRow>)> {
    sc.validate(map)?;
    cfg.sim.validate()?;
    let art = match (variant.needs_map(), artifacts) {
        (true, None) => return Err(TntError::spec(format!("planner '{}' needs a trained encoder", variant.name()))),
        (true, Some(a)) => Some(a),
        (false, _) => None,
    };
    if cfg.infer_every == 0 {
        return Err(TntError::spec("infer_every must be positive"));
    }
    let mppi_cfg = MppiConfig {
        goal_radius: sc.success_radius,
        ..variant.mppi_config(&cfg.mppi)
    };
    mppi_cfg.validate()?;
    let params = SimParams {
        dt: mppi_cfg.dt,
        ..cfg.sim.clone()
    };
    let mut plan_rng = seed::child_rng(seed, "planner", sc.id as u64);
    let mut sim_rng = seed::child_rng(seed, "simulator", sc.id as u64);

    let max_steps = (sc.time_limit / params.dt).round() as usize;
    let stuck_steps = ((cfg.stuck_window / params.dt).round() as usize).max(1);
    let mut state = settle_start(map, sc, &cfg.geom)?;
    let mut nominal = vec![Command::new(0.3, 0.0); mppi_cfg.horizon];
    let mut tm: Option<TraversabilityMap> = None;
    let mut field: Option<GoalField> = None;
    let mut path = None;
    let mut rows = vec![TrajRow {
        step: 0,
        state,
        cost: 0.0,
    }];
    let mut cmds = Vec::new();
    let mut failure = FailureKind::Timeout;
    let mut success = false;
    let mut steps = 0;

    for k in 0..max_steps {
        if state.distance_to(sc.goal) <= sc.success_radius {
            success = true;
            failure = FailureKind::None;
            break;
        }
        if let Some(a) = art {
            if k % cfg.infer_every == 0 {
                let t = infer_map(&a.encoder, map, &a.weights)?;
                if let (Some(fp), true) = (cfg.field, mppi_cfg.guided) {
                    let tau = mppi_cfg.threshold.unwrap_or_else(|| default_threshold(&t));
                    field = Some(GoalField::build(&t, sc.goal, tau, fp)?);
                }
                tm = Some(t);
                if variant == PlannerVariant::AstarTracker {
                    let t = tm.as_ref().expect("just inferred");
                    let grid = downsample(t, cfg.astar_grid.0.min(t.rows()), cfg.astar_grid.1.min(t.cols()))?;
                    let s = grid.cell_of(state.x, state.y);
                    let g = grid.cell_of(sc.goal[0], sc.goal[1]);
                    let mut p = astar_plan(&grid, s, g, cfg.astar_beta)?;
                    if let Some(last) = p.waypoints.last_mut() {
                        *last = sc.goal;
                    }
                    path = Some(p);
                }
            }
        }
        let (cmd, cost) = if let Some(p) = &path {
            let gains = TrackerGains {
                goal_tolerance: sc.success_radius * 0.5,
                ..cfg.tracker.clone()
            };
            (track_path(p, &state, &gains), p.cost)
        } else {
            let ctx = PlanContext {
                map,
                geom: &cfg.geom,
                params: &params,
                tm: tm.as_ref(),
                field: field.as_ref(),
            };
            let out = mppi_plan(&state, sc.goal, &nominal, &mppi_cfg, &ctx, &mut plan_rng)?;
            let best = out.diagnostics.costs.iter().copied().fold(f64::INFINITY, f64::min);
            nominal = out.next_nominal;
            (out.plan[0], best)
        };
        let cmd = cmd.clamped(&params);
        let next = match simulate_step(&state, cmd, map, &cfg.geom, &params, &mut sim_rng) {
            Ok(s) => s,
            Err(TntError::Bounds { .. }) => {
                failure = FailureKind::OutOfMap;
                steps = k + 1;
                break;
            }
            Err(e) => return Err(e),
        };
        rows.push(TrajRow {
            step: k + 1,
            state: next,
            cost,
        });
        state = next;
        steps = k + 1;
        cmds.push(cmd);
        if params.is_rollover(&state) {
            failure = FailureKind::Rollover;
            break;
        }
        if rows.len() > stuck_steps {
            let then = rows[rows.len() - 1 - stuck_steps].state;
            if state.distance_to([then.x, then.y]) < cfg.stuck_distance {
                failure = FailureKind::Stuck;
                break;
            }
        }
        if state.distance_to(sc.goal) <= sc.success_radius {
            success = true;
            failure = FailureKind::None;
            break;
        }
    }
    Ok((metrics(sc.id, variant, success, failure, steps, params.dt, &rows, &cmds), rows))
}

fn metrics(
    scenario: usize,
    variant: PlannerVariant,
    success: bool,
    failure: FailureKind,
    steps: usize,
    dt: f64,
    rows: &[TrajRow],
    cmds: &[Command],
) -> RunMetrics {
    let deg = 180.0 / std::f64::consts::PI;
    let n = rows.len() as f64;
    let mean_abs = |f: &dyn Fn(&TrajRow) -> f64| rows.iter().map(|r| f(r).abs()).sum::<f64>() / n;
    let mean_diff = |f: &dyn Fn(&TrajRow) -> f64| {
        if rows.len() < 2 {
            0.0
        } else {
            rows.windows(2).map(|w| (f(&w[1]) - f(&w[0])).abs()).sum::<f64>() / (rows.len() - 1) as f64
        }
    };
    let cmd_diff = |f: &dyn Fn(&Command) -> f64| {
        if cmds.len() < 2 {
            0.0
        } else {
            cmds.windows(2).map(|w| (f(&w[1]) - f(&w[0])).abs()).sum::<f64>() / (cmds.len() - 1) as f64
        }
    };
    RunMetrics {
        scenario,
        variant,
        success,
        time: steps as f64 * dt,
        steps,
        mean_abs_roll: deg * mean_abs(&|r| r.state.roll),
        mean_abs_pitch: deg * mean_abs(&|r| r.state.pitch),
        mean_abs_droll: deg * mean_diff(&|r| r.state.roll),
        mean_abs_dpitch: deg * mean_diff(&|r| r.state.pitch),
        mean_abs_dv_cmd: cmd_diff(&|c| c.v),
        mean_abs_domega_cmd: cmd_diff(&|c| c.omega),
        failure,
    }
}
