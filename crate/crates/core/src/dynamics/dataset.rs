//! Simulator-driven dataset collection and the TNTD record format.
//!
//! TNTD layout (little endian): magic `TNTD`, u16 version, u8 record kind
//! (0 = velocity deltas, 1 = pose deltas), u32 count, then per record the
//! patch as `patch_cells^2` f32 (row-major, forward axis first) followed by
//! the target (2 f32 for velocity, 4 f32 for pose). The patch side is
//! recovered from the payload length.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    predict_rollout, settle_pose, simulate_step, wrap_angle, Command, SimParams, VehicleGeometry, VehicleState,
};
use crate::codec::{Reader, Writer};
use crate::error::{Result, TntError};
use crate::seed;
use crate::terrain::{ElevationMap, PatchSpec};

pub const TNTD_MAGIC: &[u8; 4] = b"TNTD";
pub const TNTD_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// `(Δv, Δω)` = commanded minus realized body velocity.
    Velocity,
    /// `(Δx, Δy, Δroll, Δpitch)` = predicted minus simulated pose after one
    /// horizon, planar components in the starting body frame.
    Pose,
}

impl RecordKind {
    pub fn target_len(self) -> usize {
        match self {
            Self::Velocity => 2,
            Self::Pose => 4,
        }
    }

    fn code(self) -> u8 {
        match self {
            Self::Velocity => 0,
            Self::Pose => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Self::Velocity),
            1 => Ok(Self::Pose),
            other => Err(TntError::format(format!("bad record kind {other}"))),
        }
    }
}

/// Patch/target pairs stored flat in f32, as on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    kind: RecordKind,
    patch_cells: usize,
    patches: Vec<f32>,
    targets: Vec<f32>,
}

impl Dataset {
    pub fn new(kind: RecordKind, patch_cells: usize) -> Self {
        Self {
            kind,
            patch_cells,
            patches: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    pub fn patch_cells(&self) -> usize {
        self.patch_cells
    }

    pub fn patch_len(&self) -> usize {
        self.patch_cells * self.patch_cells
    }

    pub fn target_len(&self) -> usize {
        self.kind.target_len()
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.target_len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn patch(&self, i: usize) -> &[f32] {
        let n = self.patch_len();
        &self.patches[i * n..(i + 1) * n]
    }

    pub fn target(&self, i: usize) -> &[f32] {
        let k = self.target_len();
        &self.targets[i * k..(i + 1) * k]
    }

    /// All patches, record-major.
    pub fn patches_flat(&self) -> &[f32] {
        &self.patches
    }

    /// All targets, record-major.
    pub fn targets_flat(&self) -> &[f32] {
        &self.targets
    }

    pub fn push(&mut self, patch: &[f64], target: &[f64]) -> Result<()> {
        if patch.len() != self.patch_len() || target.len() != self.target_len() {
            return Err(TntError::spec("record shape does not match dataset"));
        }
        self.patches.extend(patch.iter().map(|&h| h as f32));
        self.targets.extend(target.iter().map(|&t| t as f32));
        Ok(())
    }

    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        if other.kind != self.kind || other.patch_cells != self.patch_cells {
            return Err(TntError::spec("cannot merge datasets of different shape"));
        }
        self.patches.extend_from_slice(&other.patches);
        self.targets.extend_from_slice(&other.targets);
        Ok(())
    }

    /// Subset by record index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut out = Dataset::new(self.kind, self.patch_cells);
        for &i in indices {
            out.patches.extend_from_slice(self.patch(i));
            out.targets.extend_from_slice(self.target(i));
        }
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(TNTD_MAGIC)
            .u16(TNTD_VERSION)
            .u8(self.kind.code())
            .u32(self.len() as u32);
        for i in 0..self.len() {
            w.f32s(self.patch(i).iter().copied());
            w.f32s(self.target(i).iter().copied());
        }
        w.finish()
    }

    pub fn decode(data: &[u8]) -> Result<Self> {
        let mut r = Reader::new(data);
        r.magic(TNTD_MAGIC)?;
        r.version(TNTD_VERSION)?;
        let kind = RecordKind::from_code(r.u8("record kind")?)?;
        let count = r.u32("count")? as usize;
        if count == 0 {
            r.finish()?;
            return Ok(Self::new(kind, 0));
        }
        let payload = r.remaining();
        if payload % (4 * count) != 0 {
            return Err(TntError::format("short payload"));
        }
        let per_record = payload / (4 * count);
        let patch_len = per_record
            .checked_sub(kind.target_len())
            .ok_or_else(|| TntError::format("short payload"))?;
        let side = (patch_len as f64).sqrt().round() as usize;
        if side * side != patch_len || side == 0 {
            return Err(TntError::format(format!("record size {per_record} is not a square patch plus target")));
        }
        let mut ds = Self::new(kind, side);
        ds.patches.reserve(count * patch_len);
        for _ in 0..count {
            ds.patches.extend(r.f32s(patch_len, "patch")?);
            ds.targets.extend(r.f32s(kind.target_len(), "target")?);
        }
        r.finish()?;
        Ok(ds)
    }
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, ds.encode())?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::decode(&fs::read(path)?)
}

/// Bounded Ornstein-Uhlenbeck walk over `(v, ω)` commands, with a pull back
/// toward the map interior near the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationPolicy {
    pub v_range: (f64, f64),
    pub v_mean: f64,
    pub v_sigma: f64,
    pub omega_limit: f64,
    pub omega_sigma: f64,
    /// Mean reversion rate per step, in [0, 1].
    pub reversion: f64,
    /// Heading-correction gain applied within `edge_band` meters of the usable region edge.
    pub edge_gain: f64,
    pub edge_band: f64,
    /// Start a pose-delta window every this many steps.
    pub window_stride: usize,
}

impl Default for ExplorationPolicy {
    fn default() -> Self {
        Self {
            v_range: (0.1, 0.8),
            v_mean: 0.45,
            v_sigma: 0.04,
            omega_limit: 1.2,
            omega_sigma: 0.15,
            reversion: 0.05,
            edge_gain: 1.5,
            edge_band: 0.5,
            window_stride: 5,
        }
    }
}

impl ExplorationPolicy {
    /// Constant commands: useful for noise-free checks.
    pub fn constant(v: f64) -> Self {
        Self {
            v_range: (v, v),
            v_mean: v,
            v_sigma: 0.0,
            omega_sigma: 0.0,
            reversion: 0.0,
            edge_gain: 0.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.v_range.0 > self.v_range.1 || self.v_sigma < 0.0 || self.omega_sigma < 0.0 {
            return Err(TntError::spec("invalid exploration policy ranges"));
        }
        if !(0.0..=1.0).contains(&self.reversion) || self.window_stride == 0 {
            return Err(TntError::spec("invalid exploration policy rates"));
        }
        Ok(())
    }
}

/// Sample bookkeeping: every step yields one velocity record or one drop, and
/// every opened window yields one pose record or one drop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CollectStats {
    pub steps: usize,
    pub velocity_records: usize,
    pub velocity_dropped: usize,
    pub windows: usize,
    pub pose_records: usize,
    pub pose_dropped: usize,
    pub episodes: usize,
    pub rollovers: usize,
}

impl CollectStats {
    fn add(&mut self, o: &CollectStats) {
        self.steps += o.steps;
        self.velocity_records += o.velocity_records;
        self.velocity_dropped += o.velocity_dropped;
        self.windows += o.windows;
        self.pose_records += o.pose_records;
        self.pose_dropped += o.pose_dropped;
        self.episodes += o.episodes;
        self.rollovers += o.rollovers;
    }
}

struct Window {
    start: VehicleState,
    patch: Vec<f64>,
    commands: Vec<Command>,
}

struct MapRun<'a> {
    map: &'a ElevationMap,
    geom: &'a VehicleGeometry,
    params: &'a SimParams,
    policy: &'a ExplorationPolicy,
    patch_cells: usize,
    /// Usable region in world coordinates: [x_lo, x_hi, y_lo, y_hi].
    region: [f64; 4],
}

impl MapRun<'_> {
    fn spawn(&self, rng: &mut seed::Rng) -> Result<(VehicleState, Command)> {
        let [x0, x1, y0, y1] = self.region;
        let x = rng.gen_range(x0..=x1);
        let y = rng.gen_range(y0..=y1);
        let yaw = rng.gen_range(-PI..PI);
        let (lo, hi) = self.policy.v_range;
        let v = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        let pose = settle_pose(self.map, x, y, yaw, self.geom)?;
        let state = VehicleState {
            z: pose.z,
            roll: pose.roll,
            pitch: pose.pitch,
            ..VehicleState::at(x, y, yaw).with_velocity(v, 0.0)
        };
        Ok((state, Command::new(v, 0.0)))
    }

    fn next_command(&self, prev: Command, state: &VehicleState, rng: &mut seed::Rng) -> Command {
        let p = self.policy;
        let mut v = prev.v + p.reversion * (p.v_mean - prev.v);
        let mut omega = prev.omega - p.reversion * prev.omega;
        if p.v_sigma > 0.0 {
            v += p.v_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        if p.omega_sigma > 0.0 {
            omega += p.omega_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        if p.edge_gain > 0.0 {
            let [x0, x1, y0, y1] = self.region;
            let edge = (state.x - x0).min(x1 - state.x).min(state.y - y0).min(y1 - state.y);
            if edge < p.edge_band {
                let cx = 0.5 * (x0 + x1);
                let cy = 0.5 * (y0 + y1);
                let to_center = wrap_angle((cy - state.y).atan2(cx - state.x) - state.yaw);
                omega += p.edge_gain * to_center * (1.0 - edge.max(0.0) / p.edge_band);
            }
        }
        Command::new(
            v.clamp(p.v_range.0, p.v_range.1),
            omega.clamp(-p.omega_limit, p.omega_limit),
        )
        .clamped(self.params)
    }

    fn patch(&self, s: &VehicleState) -> Option<Vec<f64>> {
        self.map
            .extract_patch_at(s.x, s.y, s.yaw, self.patch_cells)
            .ok()
            .map(|p| p.cells().to_vec())
    }

    fn in_region(&self, s: &VehicleState) -> bool {
        let [x0, x1, y0, y1] = self.region;
        s.x >= x0 && s.x <= x1 && s.y >= y0 && s.y <= y1
    }

    fn run(&self, steps: usize, rng: &mut seed::Rng) -> Result<(Dataset, Dataset, CollectStats)> {
        let mut dv = Dataset::new(RecordKind::Velocity, self.patch_cells);
        let mut dq = Dataset::new(RecordKind::Pose, self.patch_cells);
        let mut stats = CollectStats::default();
        let mut windows: Vec<Window> = Vec::new();
        let (mut state, mut cmd) = self.spawn(rng)?;
        stats.episodes = 1;
        let mut age = 0usize;
        let horizon = self.params.horizon;

        for _ in 0..steps {
            stats.steps += 1;
            let patch = self.patch(&state);
            if age % self.policy.window_stride == 0 {
                stats.windows += 1;
                match &patch {
                    Some(p) => windows.push(Window {
                        start: state,
                        patch: p.clone(),
                        commands: Vec::with_capacity(horizon),
                    }),
                    None => stats.pose_dropped += 1,
                }
            }
            if age > 0 {
                cmd = self.next_command(cmd, &state, rng);
            }
            let next = simulate_step(&state, cmd, self.map, self.geom, self.params, rng);
            let next = match next {
                Ok(n) if n.is_finite() => n,
                _ => {
                    stats.velocity_dropped += 1;
                    stats.pose_dropped += windows.len();
                    windows.clear();
                    (state, cmd) = self.spawn(rng)?;
                    stats.episodes += 1;
                    age = 0;
                    continue;
                }
            };
            match &patch {
                Some(p) => {
                    dv.push(p, &[cmd.v - next.v, cmd.omega - next.omega])?;
                    stats.velocity_records += 1;
                }
                None => stats.velocity_dropped += 1,
            }

            for w in windows.iter_mut() {
                w.commands.push(cmd);
            }
            let (done, open): (Vec<Window>, Vec<Window>) =
                windows.drain(..).partition(|w| w.commands.len() == horizon);
            windows = open;
            for w in done {
                let pred = predict_rollout(&w.start, &w.commands, self.map, self.geom, self.params)?;
                match pred.last() {
                    Some(p) if pred.is_complete() => {
                        let (s, c) = w.start.yaw.sin_cos();
                        let (dx, dy) = (p.x - next.x, p.y - next.y);
                        let target = [
                            dx * c + dy * s,
                            -dx * s + dy * c,
                            p.roll - next.roll,
                            p.pitch - next.pitch,
                        ];
                        dq.push(&w.patch, &target)?;
                        stats.pose_records += 1;
                    }
                    _ => stats.pose_dropped += 1,
                }
            }

            state = next;
            age += 1;
            if self.params.is_rollover(&state) || !self.in_region(&state) {
                if self.params.is_rollover(&state) {
                    stats.rollovers += 1;
                }
                stats.pose_dropped += windows.len();
                windows.clear();
                (state, cmd) = self.spawn(rng)?;
                stats.episodes += 1;
                age = 0;
            }
        }
        stats.pose_dropped += windows.len();
        Ok((dv, dq, stats))
    }
}

/// Drives the simulator over every map and returns the velocity-delta and
/// pose-delta datasets. Maps are processed independently, one rng stream per
/// map, and merged in map order.
pub fn collect_dataset(
    maps: &[ElevationMap],
    steps_per_map: usize,
    policy: &ExplorationPolicy,
    geom: &VehicleGeometry,
    params: &SimParams,
    spec: &PatchSpec,
    seed: u64,
) -> Result<(Dataset, Dataset, CollectStats)> {
    if maps.is_empty() {
        return Err(TntError::spec("collect_dataset needs at least one map"));
    }
    if steps_per_map < params.horizon {
        return Err(TntError::spec("steps per map must cover at least one prediction horizon"));
    }
    policy.validate()?;
    params.validate()?;
    geom.validate()?;
    spec.validate()?;

    let per_map: Vec<Result<(Dataset, Dataset, CollectStats)>> = maps
        .par_iter()
        .enumerate()
        .map(|(i, map)| {
            // Keep the whole footprint patch on the map at any yaw.
            let margin = (spec.patch_cells as f64 - 1.0) / 2.0 * std::f64::consts::SQRT_2 * map.resolution()
                + map.resolution();
            let o = map.origin();
            let ext_x = (map.rows() - 1) as f64 * map.resolution();
            let ext_y = (map.cols() - 1) as f64 * map.resolution();
            if 2.0 * margin >= ext_x || 2.0 * margin >= ext_y {
                return Err(TntError::spec(format!("map {i} is too small for the footprint patch")));
            }
            let run = MapRun {
                map,
                geom,
                params,
                policy,
                patch_cells: spec.patch_cells,
                region: [o[0] + margin, o[0] + ext_x - margin, o[1] + margin, o[1] + ext_y - margin],
            };
            let mut rng = seed::child_rng(seed, "collect", i as u64);
            run.run(steps_per_map, &mut rng)
        })
        .collect();

    let mut dv = Dataset::new(RecordKind::Velocity, spec.patch_cells);
    let mut dq = Dataset::new(RecordKind::Pose, spec.patch_cells);
    let mut stats = CollectStats::default();
    for r in per_map {
        let (a, b, s) = r?;
        dv.extend(&a)?;
        dq.extend(&b)?;
        stats.add(&s);
    }
    Ok((dv, dq, stats))
}
