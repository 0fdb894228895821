//! Sampling-based receding-horizon control with optional traversability
//! guidance.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{predict_rollout, Command, SimParams, VehicleGeometry, VehicleState};
use crate::error::{Result, TntError};
use crate::terrain::ElevationMap;
use crate::travmap::TraversabilityMap;

use super::field::GoalField;

/// Cost assigned to masked rollouts and billed per step outside the map.
pub const SENTINEL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Rollouts touching a cell above τ get the sentinel cost.
    Hard,
    /// Each step above τ adds `soft_penalty`.
    Soft,
}

impl std::str::FromStr for MaskMode {
    type Err = TntError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Self::Hard),
            "soft" => Ok(Self::Soft),
            other => Err(TntError::spec(format!("unknown mask mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    /// Distance to goal at the final state.
    pub goal_terminal: f64,
    /// Distance to goal summed over steps (times dt).
    pub goal_running: f64,
    /// Combined traversability summed over steps (times dt).
    pub traversability: f64,
    /// Squared command changes summed over steps.
    pub effort: f64,
    /// Per step with |roll| or |pitch| above the rollover angle.
    pub rollover: f64,
    /// |roll| + |pitch| of the predicted states summed over steps (times dt).
    pub stability: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            goal_terminal: 10.0,
            goal_running: 2.0,
            traversability: 5.0,
            effort: 0.1,
            rollover: 100.0,
            stability: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiConfig {
    pub horizon: usize,
    pub samples: usize,
    pub lambda: f64,
    pub noise_v: f64,
    pub noise_omega: f64,
    pub dt: f64,
    pub weights: CostWeights,
    /// Roll/pitch magnitude penalized by the rollover term, radians.
    pub rollover_angle: f64,
    /// Non-traversable threshold; `None` uses the 90th percentile of the
    /// map's valid combined values.
    pub threshold: Option<f64>,
    pub mask: MaskMode,
    pub soft_penalty: f64,
    /// Re-cost in soft mode when every sample is hard-masked.
    pub soft_fallback: bool,
    /// Use the traversability map at all.
    pub guided: bool,
    /// Keep the sampled sequences in the diagnostics.
    pub record_samples: bool,
    /// A rollout that comes this close to the goal has arrived; later steps
    /// are not costed. Zero disables.
    pub goal_radius: f64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            horizon: 12,
            samples: 256,
            lambda: 0.5,
            noise_v: 0.25,
            noise_omega: 0.6,
            dt: 0.1,
            weights: CostWeights::default(),
            rollover_angle: 30f64.to_radians(),
            threshold: None,
            mask: MaskMode::Hard,
            soft_penalty: 50.0,
            soft_fallback: true,
            guided: true,
            record_samples: false,
            goal_radius: 0.0,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.samples < 2 {
            return Err(TntError::spec("MPPI needs horizon >= 1 and at least 2 samples"));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(TntError::spec("MPPI temperature must be positive"));
        }
        if !(self.noise_v >= 0.0 && self.noise_omega >= 0.0) || !(self.dt > 0.0) {
            return Err(TntError::spec("MPPI noise must be non-negative and dt positive"));
        }
        if !(self.goal_radius >= 0.0) {
            return Err(TntError::spec("MPPI goal radius must be non-negative"));
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return Err(TntError::spec("MPPI threshold must be finite"));
            }
        }
        Ok(())
    }
}

/// Decomposed rollout cost; `total` includes the sentinel when masked.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostTerms {
    pub goal: f64,
    pub traversability: f64,
    pub effort: f64,
    pub rollover: f64,
    pub stability: f64,
    pub soft: f64,
    pub exited_steps: usize,
    pub masked: bool,
    pub total: f64,
}

/// 90th percentile (nearest rank) of the valid combined values.
pub fn default_threshold(tm: &TraversabilityMap) -> f64 {
    let mut v: Vec<f64> = tm
        .combined()
        .iter()
        .zip(tm.valid_mask())
        .filter(|(_, &ok)| ok)
        .map(|(&c, _)| c)
        .collect();
    if v.is_empty() {
        return tm.max_combined();
    }
    v.sort_by(f64::total_cmp);
    let rank = ((0.9 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Cost of one rollout. `commands` are the commands that produced
/// `traj`, `prev` the command in effect before the first of them, and
/// `horizon` the intended length (missing steps count as exited). With a
/// `field`, goal distances are its cost-to-go instead of straight lines.
/// Cost terms stop at the first state within `cfg.goal_radius` of the goal;
/// the hard mask and exit counts still cover the whole rollout.
#[allow(clippy::too_many_arguments)]
pub fn rollout_cost(
    traj: &[VehicleState],
    commands: &[Command],
    prev: Command,
    horizon: usize,
    tm: Option<&TraversabilityMap>,
    field: Option<&GoalField>,
    tau: f64,
    goal: [f64; 2],
    cfg: &MppiConfig,
    mode: MaskMode,
) -> CostTerms {
    let w = &cfg.weights;
    let dist = |s: &VehicleState| {
        field
            .and_then(|f| f.distance_at(s.x, s.y))
            .filter(|d| d.is_finite())
            .unwrap_or_else(|| s.distance_to(goal))
    };
    let mut t = CostTerms::default();
    // Masking and exits look at the whole rollout, costs stop on arrival.
    if let Some(tm) = tm {
        for s in traj {
            match tm.combined_at_world(s.x, s.y) {
                Some(v) if v > tau && mode == MaskMode::Hard => t.masked = true,
                Some(_) => {}
                None => t.exited_steps += 1,
            }
        }
    }
    t.exited_steps += horizon.saturating_sub(traj.len());
    let arrived = traj.iter().position(|s| s.distance_to(goal) <= cfg.goal_radius);
    let traj = arrived.map_or(traj, |k| &traj[..=k]);
    if let Some(last) = traj.last() {
        t.goal += w.goal_terminal * dist(last);
    }
    let mut before = prev;
    for (i, s) in traj.iter().enumerate() {
        t.goal += w.goal_running * dist(s) * cfg.dt;
        let c = commands[i];
        t.effort += w.effort * ((c.v - before.v).powi(2) + (c.omega - before.omega).powi(2));
        before = c;
        if s.roll.abs() > cfg.rollover_angle || s.pitch.abs() > cfg.rollover_angle {
            t.rollover += w.rollover;
        }
        t.stability += w.stability * (s.roll.abs() + s.pitch.abs()) * cfg.dt;
        if let Some(tm) = tm {
            if let Some(v) = tm.combined_at_world(s.x, s.y) {
                t.traversability += w.traversability * v * cfg.dt;
                if v > tau && mode == MaskMode::Soft {
                    t.soft += cfg.soft_penalty;
                }
            }
        }
    }
    t.total = t.goal + t.traversability + t.effort + t.rollover + t.stability + t.soft + SENTINEL * t.exited_steps as f64;
    if t.masked {
        t.total += SENTINEL;
    }
    t
}

/// Whether any state sits on a cell above `tau` (or off the map).
pub fn enters_above(traj: &[VehicleState], tm: &TraversabilityMap, tau: f64) -> bool {
    traj.iter()
        .any(|s| tm.combined_at_world(s.x, s.y).map_or(true, |v| v > tau))
}

/// Softmax weights `exp(-(c - min c)/λ)`, normalized to sum to one.
pub fn softmax_weights(costs: &[f64], lambda: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = costs.iter().map(|&c| (-(c - min) / lambda).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / sum).collect()
}

/// Weighted average of sample sequences.
pub fn weighted_sequence(samples: &[Vec<Command>], weights: &[f64]) -> Vec<Command> {
    let n = samples.first().map_or(0, Vec::len);
    (0..n)
        .map(|t| {
            let (mut v, mut o) = (0.0, 0.0);
            for (s, &w) in samples.iter().zip(weights) {
                v += w * s[t].v;
                o += w * s[t].omega;
            }
            Command::new(v, o)
        })
        .collect()
}

/// Drops the first command and repeats the last.
pub fn shift(seq: &[Command]) -> Vec<Command> {
    let mut out: Vec<Command> = seq.iter().skip(1).copied().collect();
    if let Some(&last) = seq.last() {
        out.push(last);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiDiagnostics {
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
    pub terms: Vec<CostTerms>,
    pub effective_sample_size: f64,
    pub masked_count: usize,
    /// Every sample was hard-masked.
    pub saturated: bool,
    /// The weighted plan entered a masked cell and the best feasible sample
    /// was used instead.
    pub used_best_sample: bool,
    pub tau: f64,
    pub samples: Option<Vec<Vec<Command>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiOutput {
    /// Optimized sequence; its first command is executed now.
    pub plan: Vec<Command>,
    /// `plan` shifted by one step, the nominal for the next call.
    pub next_nominal: Vec<Command>,
    pub diagnostics: MppiDiagnostics,
}

/// Shared, read-only planning context.
pub struct PlanContext<'a> {
    pub map: &'a ElevationMap,
    pub geom: &'a VehicleGeometry,
    pub params: &'a SimParams,
    pub tm: Option<&'a TraversabilityMap>,
    /// Cost-to-go for the goal terms of guided planning.
    pub field: Option<&'a GoalField>,
}

/// One MPPI iteration around `nominal`.
pub fn mppi_plan<R: Rng + ?Sized>(
    state: &VehicleState,
    goal: [f64; 2],
    nominal: &[Command],
    cfg: &MppiConfig,
    ctx: &PlanContext<'_>,
    rng: &mut R,
) -> Result<MppiOutput> {
    cfg.validate()?;
    if nominal.len() != cfg.horizon {
        return Err(TntError::spec(format!(
            "nominal has {} commands, horizon is {}",
            nominal.len(),
            cfg.horizon
        )));
    }
    let params = SimParams {
        dt: cfg.dt,
        ..ctx.params.clone()
    };
    let tm = if cfg.guided {
        Some(ctx.tm.ok_or_else(|| TntError::spec("guided MPPI needs a traversability map"))?)
    } else {
        None
    };
    let tau = match (tm, cfg.threshold) {
        (_, Some(t)) => t,
        (Some(tm), None) => default_threshold(tm),
        (None, None) => f64::INFINITY,
    };

    let field = if cfg.guided { ctx.field } else { None };
    let nominal: Vec<Command> = nominal.iter().map(|c| c.clamped(&params)).collect();
    // Sample 0 is the nominal itself.
    let mut samples = Vec::with_capacity(cfg.samples);
    samples.push(nominal.clone());
    for _ in 1..cfg.samples {
        let seq = nominal
            .iter()
            .map(|c| {
                let ev: f64 = rng.sample(StandardNormal);
                let eo: f64 = rng.sample(StandardNormal);
                Command::new(c.v + cfg.noise_v * ev, c.omega + cfg.noise_omega * eo).clamped(&params)
            })
            .collect();
        samples.push(seq);
    }

    let prev = Command::new(state.v, state.omega);
    let rollouts: Vec<Vec<VehicleState>> = samples
        .par_iter()
        .map(|seq| predict_rollout(state, seq, ctx.map, ctx.geom, &params).map(|r| r.states))
        .collect::<Result<_>>()?;
    let cost_all = |mode: MaskMode| -> Vec<CostTerms> {
        rollouts
            .iter()
            .zip(&samples)
            .map(|(traj, seq)| rollout_cost(traj, seq, prev, cfg.horizon, tm, field, tau, goal, cfg, mode))
            .collect()
    };
    let mut terms = cost_all(cfg.mask);
    let masked_count = terms.iter().filter(|t| t.masked).count();
    let saturated = cfg.mask == MaskMode::Hard && masked_count == samples.len();
    if saturated && !cfg.soft_fallback {
        let costs: Vec<f64> = terms.iter().map(|t| t.total).collect();
        return Ok(MppiOutput {
            plan: nominal.clone(),
            next_nominal: shift(&nominal),
            diagnostics: MppiDiagnostics {
                weights: vec![1.0 / samples.len() as f64; samples.len()],
                effective_sample_size: samples.len() as f64,
                costs,
                terms,
                masked_count,
                saturated,
                used_best_sample: false,
                tau,
                samples: cfg.record_samples.then_some(samples),
            },
        });
    }
    if saturated {
        terms = cost_all(MaskMode::Soft);
    }
    let costs: Vec<f64> = terms.iter().map(|t| t.total).collect();
    let weights = softmax_weights(&costs, cfg.lambda);
    let mut plan = weighted_sequence(&samples, &weights);

    let mut used_best_sample = false;
    if let (Some(tm), MaskMode::Hard, false) = (tm, cfg.mask, saturated) {
        let own = predict_rollout(state, &plan, ctx.map, ctx.geom, &params)?;
        if !own.is_complete() || enters_above(&own.states, tm, tau) {
            let best = (0..samples.len())
                .filter(|&k| !terms[k].masked && terms[k].exited_steps == 0)
                .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
            if let Some(k) = best {
                plan = samples[k].clone();
                used_best_sample = true;
            }
        }
    }
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    Ok(MppiOutput {
        next_nominal: shift(&plan),
        plan,
        diagnostics: MppiDiagnostics {
            costs,
            weights,
            terms,
            effective_sample_size: ess,
            masked_count,
            saturated,
            used_best_sample,
            tau,
            samples: cfg.record_samples.then_some(samples),
        },
    })
}
