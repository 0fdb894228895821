//! Acceptance run: one pass/fail line per criterion.
//!
//! Set `TNT_ACCEPTANCE_STRICT=1` to exit nonzero when any criterion fails.

use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::Rng;
use tnt::bench::*;
use tnt::dynamics::{
    collect_dataset, predict_rollout, settle_pose, simulate_step, Command, Dataset, SimParams, VehicleGeometry,
    VehicleState,
};
use tnt::learn::{grad_check, regressor_arch, regressor_init, split_indices, ConstantBaseline, Regressor};
use tnt::plan::*;
use tnt::seed;
use tnt::stability::roll_pitch;
use tnt::terrain::{generate_terrain, ElevationMap, TerrainKind};
use tnt::travmap::*;
use tnt::TntError;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn plane(theta: f64, dir: f64, offset: f64) -> ElevationMap {
    let g = theta.tan();
    ElevationMap::from_fn(100, 100, 0.02, [-1.0, -1.0], move |x, y| offset + g * (x * dir.cos() + y * dir.sin())).unwrap()
}

fn c1_pairwise_model_on_planes() -> Outcome {
    let t = Instant::now();
    let geom = VehicleGeometry::default();
    let mut rng = seed::rng(101);
    let mut worst = 0.0f64;
    for deg in [5.0f64, 10.0, 20.0] {
        let theta = deg.to_radians();
        let map = plane(theta, 0.0, 0.0);
        let g = theta.tan();
        for _ in 0..20 {
            let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let est = roll_pitch(&map.extract_patch_at(0.0, 0.0, yaw, 25).unwrap(), &geom).unwrap();
            let roll = (g * yaw.sin()).atan().abs();
            let pitch = (g * yaw.cos()).atan().abs();
            worst = worst.max((est.roll - roll).abs()).max((est.pitch - pitch).abs());
        }
    }
    let el = secs(t.elapsed());
    outcome(worst < 1e-6 && el < 1.0, format!("max error {worst:.2e} rad over 60 poses, {el:.3} s"))
}

fn c2_settle_on_planes() -> Outcome {
    let geom = VehicleGeometry::default();
    let mut rng = seed::rng(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let theta = rng.gen_range(0.0f64..30.0).to_radians();
        let dir = rng.gen_range(-3.14..3.14);
        let yaw = rng.gen_range(-3.14..3.14);
        let map = plane(theta, dir, rng.gen_range(-1.0..1.0));
        let (x, y) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let p = settle_pose(&map, x, y, yaw, &geom).unwrap();
        let g = theta.tan();
        let pitch = (g * (dir - yaw).cos()).atan();
        let roll = (g * (dir - yaw).sin()).atan();
        worst = worst.max((p.roll - roll).abs()).max((p.pitch - pitch).abs());
    }
    let flat = ElevationMap::flat(60, 60, 0.025, 0.0).unwrap();
    let f = settle_pose(&flat, 0.7, 0.8, 0.9, &geom).unwrap();
    let exact = f.z == geom.clearance && f.roll == 0.0 && f.pitch == 0.0;
    outcome(
        worst < 1e-6 && exact,
        format!("max error {worst:.2e} rad over 100 planes, flat ground exact: {exact}"),
    )
}

fn c3_gradients() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for s in 0..10u64 {
        let reg = regressor_init(&regressor_arch(25, &[16], 2), 2, s).unwrap();
        let map = generate_terrain(&tnt::terrain::TerrainGenSpec::boulder_field(), s, tnt::terrain::MapDims::default()).unwrap();
        let patch = map.extract_patch_at(2.0, 1.6, 0.3 * s as f64, 25).unwrap();
        let mut rng = seed::rng(s);
        let target = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        worst = worst.max(grad_check(&reg, patch.cells(), &target, 1e-5).unwrap());
    }
    let el = secs(t.elapsed());
    outcome(worst < 1e-4 && el < 30.0, format!("max relative error {worst:.2e} over 10 seeds, {el:.1} s"))
}

fn held_out_maps(cfg: &PipelineConfig, s: u64) -> Vec<ElevationMap> {
    (0..4)
        .map(|i| {
            let spec = if i % 2 == 0 {
                cfg.terrain.clone()
            } else {
                cfg.terrain.clone().with_kind(TerrainKind::Flat)
            };
            generate_terrain(&spec, seed::derive(s, "held-out-terrain", i), cfg.dims).unwrap()
        })
        .collect()
}

fn skill(reg: &Regressor, train: &Dataset, held: &Dataset, cfg: &PipelineConfig) -> (f64, f64, f64) {
    let (tr, _) = split_indices(train.len(), cfg.train.val_fraction, cfg.train.seed);
    let base = ConstantBaseline::fit(train, &tr).unwrap();
    let all: Vec<usize> = (0..held.len()).collect();
    (
        reg.mean_nll(held, &all).unwrap(),
        base.mean_nll(held, &all).unwrap(),
        reg.coverage(held, &all, 1.96).unwrap(),
    )
}

fn c4_learner_skill(cfg: &PipelineConfig) -> Outcome {
    let mut good = 0;
    let mut slowest = 0.0f64;
    let mut notes = Vec::new();
    for s in 0..10u64 {
        let collect = |maps: &[ElevationMap], label: &str| {
            collect_dataset(maps, cfg.steps_per_map, &cfg.policy, &cfg.bench.geom, &cfg.bench.sim, &cfg.patch, seed::derive(s, label, 0))
                .unwrap()
        };
        let t = Instant::now();
        let (dv, dq, _) = collect(&training_maps(cfg, s).unwrap(), "collect");
        let (vel, _) = fit_regressor(cfg, &dv, s).unwrap();
        let (pose, _) = fit_regressor(cfg, &dq, s).unwrap();
        slowest = slowest.max(secs(t.elapsed()));

        let (hv, hq, _) = collect(&held_out_maps(cfg, s), "held-out-collect");
        let (nv, bv, cv) = skill(&vel, &dv, &hv, cfg);
        let (nq, bq, cq) = skill(&pose, &dq, &hq, cfg);
        let ok = nv < bv && nq < bq && [cv, cq].iter().all(|c| (0.90..=0.99).contains(c));
        good += ok as usize;
        notes.push(format!("{s}:{}", if ok { "ok" } else { "miss" }));
        eprintln!("  seed {s}: vel nll {nv:.3} vs {bv:.3} cov {cv:.3}; pose nll {nq:.3} vs {bq:.3} cov {cq:.3}");
    }
    outcome(
        good >= 9 && slowest < 600.0,
        format!("{good}/10 seeds beat the baseline with coverage in range, slowest training {slowest:.1} s [{}]", notes.join(" ")),
    )
}

fn valid_combined(tm: &TraversabilityMap) -> Vec<f64> {
    tm.combined().iter().zip(tm.valid_mask()).filter(|(_, &v)| v).map(|(&c, _)| c).collect()
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

fn c5_encoder_fidelity(cfg: &PipelineConfig, out: &PipelineOutput) -> Outcome {
    let enc_cfg = EncoderConfig {
        seed: seed::derive(0, "train-encoder", 0),
        ..cfg.encoder.clone()
    };
    let one = EncoderConfig { epochs: 1000, ..enc_cfg.clone() };
    let (over, _) = train_encoder(&out.label_maps[..1], &cfg.patch, &one).unwrap();
    let (map, label) = &out.label_maps[0];
    let pred = infer_map(&over, map, &out.weights).unwrap();
    let (want, got) = (valid_combined(label), valid_combined(&pred));
    let mae = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).sum::<f64>() / want.len() as f64;
    let (lo, hi) = label.valid_range().unwrap();
    let rel = mae / (hi - lo);

    let t = Instant::now();
    let (enc, _) = train_encoder(&out.label_maps, &cfg.patch, &enc_cfg).unwrap();
    let train_time = secs(t.elapsed());
    let same = enc == out.encoder;

    let (mut want, mut got) = (Vec::new(), Vec::new());
    for i in cfg.label_maps..cfg.label_maps + 4 {
        let map = label_terrain(cfg, 0, i).unwrap();
        let label =
            build_label_map_strided(&map, &cfg.patch, &cfg.bench.geom, &out.velocity, &out.pose, &out.weights, cfg.label_stride)
                .unwrap();
        want.extend(valid_combined(&label));
        got.extend(valid_combined(&infer_map(&enc, &map, &out.weights).unwrap()));
    }
    let rho = spearman(&want, &got);
    outcome(
        rel <= 0.05 && rho > 0.8 && train_time < 900.0,
        format!(
            "overfit MAE {:.2}% of range, held-out rank correlation {rho:.3}, 16-map training {train_time:.1} s (matches pipeline: {same})",
            100.0 * rel
        ),
    )
}

fn median_time(mut f: impl FnMut()) -> f64 {
    let mut t: Vec<f64> = (0..5)
        .map(|_| {
            let s = Instant::now();
            f();
            secs(s.elapsed())
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t[2]
}

fn c6_inference_speed(cfg: &PipelineConfig, out: &PipelineOutput) -> Outcome {
    let map = label_terrain(cfg, 0, 99).unwrap();
    let geom = &cfg.bench.geom;
    let infer = median_time(|| {
        infer_map(&out.encoder, &map, &out.weights).unwrap();
    });
    let label = median_time(|| {
        build_label_map(&map, &cfg.patch, geom, &out.velocity, &out.pose, &out.weights).unwrap();
    });
    let s = Instant::now();
    build_label_map_strided(&map, &cfg.patch, geom, &out.velocity, &out.pose, &out.weights, 1).unwrap();
    let dense = secs(s.elapsed());
    outcome(
        infer <= label / 10.0,
        format!(
            "infer_map {:.1} ms vs build_label_map {:.1} ms ({:.0}x; per-cell labeling {:.1} ms)",
            1e3 * infer,
            1e3 * label,
            label / infer,
            1e3 * dense
        ),
    )
}

#[derive(Clone, Copy, PartialEq)]
struct OrdF(f64);

impl Eq for OrdF {}

impl PartialOrd for OrdF {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for OrdF {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0)
    }
}

fn dijkstra(g: &CostGrid, start: (usize, usize), goal: (usize, usize), beta: f64) -> f64 {
    let (rows, cols) = (g.rows(), g.cols());
    let mut dist = vec![f64::INFINITY; rows * cols];
    let mut heap = BinaryHeap::new();
    dist[start.0 * cols + start.1] = 0.0;
    heap.push((OrdF(0.0), start));
    while let Some((OrdF(d), (r, c))) = heap.pop() {
        if d > dist[r * cols + c] {
            continue;
        }
        if (r, c) == goal {
            return d;
        }
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if (dr, dc) == (0, 0) || nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                let step = if dr != 0 && dc != 0 { 2f64.sqrt() } else { 1.0 };
                if let Some(e) = edge_cost(step, g.cost(nr, nc), beta) {
                    if d + e < dist[nr * cols + nc] {
                        dist[nr * cols + nc] = d + e;
                        heap.push((OrdF(d + e), (nr, nc)));
                    }
                }
            }
        }
    }
    f64::INFINITY
}

fn c7_astar_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = seed::rng(707);
    let (mut equal, mut no_path) = (0, 0);
    for k in 0..50 {
        let (rows, cols) = (31, 25);
        let costs = (0..rows * cols)
            .map(|_| if rng.gen_bool(0.1) { f64::INFINITY } else { rng.gen_range(0.0..2.0) })
            .collect();
        let mut g = CostGrid::new(rows, cols, costs, [0.0, 0.0], 0.1).unwrap();
        let start = (rng.gen_range(0..rows), rng.gen_range(0..cols));
        let goal = (rng.gen_range(0..rows), rng.gen_range(0..cols));
        g.set_cost(start.0, start.1, 0.0);
        g.set_cost(goal.0, goal.1, 0.0);
        let beta = [0.0, 1.0, 5.0][k % 3];
        let want = dijkstra(&g, start, goal, beta);
        match astar_plan(&g, start, goal, beta) {
            Ok(p) if p.cost == want => equal += 1,
            Err(TntError::NoPath { .. }) if want.is_infinite() => {
                equal += 1;
                no_path += 1;
            }
            Ok(p) => eprintln!("  grid {k}: A* {} vs Dijkstra {want}", p.cost),
            Err(e) => eprintln!("  grid {k}: {e}"),
        }
    }
    let el = secs(t.elapsed());
    outcome(
        equal == 50 && el < 5.0,
        format!("{equal}/50 grids identical ({no_path} without a path), {el:.3} s"),
    )
}

struct World {
    map: ElevationMap,
    tm: TraversabilityMap,
    geom: VehicleGeometry,
    params: SimParams,
}

impl World {
    /// Flat ground with an expensive band across the middle.
    fn banded() -> Self {
        let (rows, cols, res) = (81, 61, 0.025);
        let n = rows * cols;
        let mut ch = vec![0.0; CHANNELS * n];
        for m in 0..rows {
            for k in 0..cols {
                ch[m * cols + k] = if (36..=44).contains(&m) && k < 44 { 1.0 } else { 0.1 };
            }
        }
        let w = CombineWeights::from_array(std::array::from_fn(|c| if c == 0 { 1.0 } else { 0.0 }));
        Self {
            map: ElevationMap::flat(rows, cols, res, 0.0).unwrap(),
            tm: TraversabilityMap::from_channels(rows, cols, res, [0.0, 0.0], ch, vec![true; n], w).unwrap(),
            geom: VehicleGeometry::default(),
            params: SimParams::default(),
        }
    }

    fn ctx(&self, tm: bool) -> PlanContext<'_> {
        PlanContext {
            map: &self.map,
            geom: &self.geom,
            params: &self.params,
            tm: tm.then_some(&self.tm),
            field: None,
        }
    }
}

fn c8_mppi_contracts() -> Outcome {
    let w = World::banded();
    let mut worst_sum = 0.0f64;
    let mut track = |weights: &[f64]| worst_sum = worst_sum.max((weights.iter().sum::<f64>() - 1.0).abs());

    let mut identity = true;
    for s in 0..10u64 {
        let cfg = MppiConfig {
            noise_v: 0.0,
            noise_omega: 0.0,
            samples: 32,
            threshold: Some(10.0),
            ..MppiConfig::default()
        };
        let nom: Vec<Command> = (0..cfg.horizon).map(|i| Command::new(0.3, 0.02 * i as f64 - 0.1)).collect();
        let state = VehicleState::at(0.4, 0.3 + 0.08 * s as f64, 0.1);
        let out = mppi_plan(&state, [1.8, 0.4], &nom, &cfg, &w.ctx(true), &mut seed::rng(s)).unwrap();
        identity &= out.plan.iter().zip(&nom).all(|(a, b)| (a.v - b.v).abs() < 1e-12 && (a.omega - b.omega).abs() < 1e-12);
        track(&out.diagnostics.weights);
    }

    let mut argmin = true;
    for s in 0..10u64 {
        let cfg = MppiConfig {
            lambda: 1e-9,
            samples: 64,
            guided: false,
            record_samples: true,
            ..MppiConfig::default()
        };
        let state = VehicleState::at(0.4, 0.4 + 0.05 * s as f64, 0.3);
        let nom = vec![Command::new(0.3, 0.1); cfg.horizon];
        let out = mppi_plan(&state, [1.8, 1.2], &nom, &cfg, &w.ctx(false), &mut seed::rng(100 + s)).unwrap();
        let d = &out.diagnostics;
        let best = (0..d.costs.len()).min_by(|&a, &b| d.costs[a].total_cmp(&d.costs[b])).unwrap();
        let rec = &d.samples.as_ref().unwrap()[best];
        argmin &= out.plan.iter().zip(rec).all(|(a, b)| (a.v - b.v).abs() < 1e-9 && (a.omega - b.omega).abs() < 1e-9);
        track(&d.weights);
    }

    let mut rng = seed::rng(808);
    for _ in 0..200 {
        let k = rng.gen_range(2..512);
        let spread = 10f64.powf(rng.gen_range(-3.0..7.0));
        let costs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..spread)).collect();
        track(&softmax_weights(&costs, 10f64.powf(rng.gen_range(-6.0..2.0))));
    }
    outcome(
        identity && argmin && worst_sum <= 1e-12,
        format!("zero-noise identity: {identity}, argmin at tiny temperature: {argmin}, max |sum w - 1| {worst_sum:.1e}"),
    )
}

fn c9_benchmark(out: &PipelineOutput, elapsed: f64) -> Outcome {
    let by = |v: PlannerVariant| out.runs.iter().filter(move |r| r.variant == v);
    let rate = |v| by(v).filter(|r| r.success).count() as f64 / by(v).count() as f64;
    let delta = |v| by(v).map(|r| r.mean_abs_droll + r.mean_abs_dpitch).sum::<f64>() / by(v).count() as f64;
    let (tnt, tal, wm) = (PlannerVariant::Tnt, PlannerVariant::TalLike, PlannerVariant::WmvctLike);

    let a = rate(tnt) >= rate(tal) && rate(tnt) >= rate(wm);
    let mutual: Vec<(f64, f64)> = by(tnt)
        .filter_map(|r| {
            let o = by(tal).find(|o| o.scenario == r.scenario)?;
            (r.success && o.success).then_some((r.time, o.time))
        })
        .collect();
    let n = mutual.len() as f64;
    let (tt, to) = (mutual.iter().map(|p| p.0).sum::<f64>() / n, mutual.iter().map(|p| p.1).sum::<f64>() / n);
    let b = !mutual.is_empty() && tt <= to;
    let c = delta(tnt) <= delta(tal) && delta(tnt) <= delta(wm);
    outcome(
        a && b && c && elapsed < 1800.0,
        format!(
            "{} scenarios; (a) success {:.0}% vs {:.0}% / {:.0}%: {a}; (b) time on {} mutual successes {tt:.2} s vs {to:.2} s: {b}; \
             (c) |droll|+|dpitch| {:.3} vs {:.3} / {:.3} deg/step: {c}; pipeline {elapsed:.0} s",
            out.scenarios.len(),
            100.0 * rate(tnt),
            100.0 * rate(tal),
            100.0 * rate(wm),
            mutual.len(),
            delta(tnt),
            delta(tal),
            delta(wm),
        ),
    )
}

fn c10_hard_mask(cfg: &PipelineConfig, out: &PipelineOutput) -> Outcome {
    let art = Artifacts {
        encoder: out.encoder.clone(),
        weights: out.weights,
    };
    let bc = &cfg.bench;
    let (mut checked, mut violations, mut skipped) = (0, 0, 0);
    'scenarios: for sc in &out.scenarios {
        let map = sc.terrain_map().unwrap();
        let mcfg = MppiConfig {
            goal_radius: sc.success_radius,
            ..PlannerVariant::Tnt.mppi_config(&bc.mppi)
        };
        let params = SimParams { dt: mcfg.dt, ..bc.sim.clone() };
        let tm = infer_map(&art.encoder, &map, &art.weights).unwrap();
        let tau = mcfg.threshold.unwrap_or_else(|| default_threshold(&tm));
        let field = bc.field.map(|fp| GoalField::build(&tm, sc.goal, tau, fp).unwrap());
        let ctx = PlanContext {
            map: &map,
            geom: &bc.geom,
            params: &params,
            tm: Some(&tm),
            field: field.as_ref(),
        };
        let p = settle_pose(&map, sc.start[0], sc.start[1], sc.start[2], &bc.geom).unwrap();
        let mut state = VehicleState {
            z: p.z,
            roll: p.roll,
            pitch: p.pitch,
            ..VehicleState::at(sc.start[0], sc.start[1], sc.start[2])
        };
        let mut nominal = vec![Command::new(0.3, 0.0); mcfg.horizon];
        let mut plan_rng = seed::child_rng(1010, "planner", sc.id as u64);
        let mut sim_rng = seed::child_rng(1010, "simulator", sc.id as u64);
        for _ in 0..300 {
            if state.distance_to(sc.goal) <= sc.success_radius {
                break;
            }
            let o = mppi_plan(&state, sc.goal, &nominal, &mcfg, &ctx, &mut plan_rng).unwrap();
            let d = &o.diagnostics;
            if !d.saturated && d.terms.iter().any(|t| !t.masked && t.exited_steps == 0) {
                let r = predict_rollout(&state, &o.plan, &map, &bc.geom, &params).unwrap();
                if !r.is_complete() || enters_above(&r.states, &tm, d.tau) {
                    violations += 1;
                }
                checked += 1;
                if checked == 100 {
                    break 'scenarios;
                }
            } else {
                skipped += 1;
            }
            match simulate_step(&state, o.plan[0].clamped(&params), &map, &bc.geom, &params, &mut sim_rng) {
                Ok(s) if !params.is_rollover(&s) => state = s,
                _ => break,
            }
            nominal = o.next_nominal;
        }
    }
    outcome(
        checked == 100 && violations == 0,
        format!("{checked} guided steps with feasible samples, {violations} entered a cell above tau ({skipped} steps without feasible samples skipped)"),
    )
}

fn bench_image(cfg: &PipelineConfig, out: &PipelineOutput, master_seed: u64) -> Vec<u8> {
    let art = Artifacts {
        encoder: out.encoder.clone(),
        weights: out.weights,
    };
    let sc = &out.scenarios[0];
    let map = sc.terrain_map().unwrap();
    let tm = infer_map(&art.encoder, &map, &art.weights).unwrap();
    let mut path = Vec::new();
    for &v in &cfg.variants {
        let (_, rows) = run_scenario(sc, v, Some(&art), &cfg.bench, bench_seed(master_seed)).unwrap();
        path.extend(rows.iter().map(|r| [r.state.x, r.state.y]));
    }
    render_traversability(&tm, &path).unwrap()
}

fn c11_determinism(cfg: &PipelineConfig, first: &PipelineOutput) -> Outcome {
    let second = run_pipeline(cfg, 0).unwrap();
    let csv = first.summary_csv == second.summary_csv;
    let ppm = bench_image(cfg, first, 0) == bench_image(cfg, &second, 0);
    let models = first.encoder == second.encoder && first.velocity == second.velocity && first.pose == second.pose;
    outcome(csv && ppm, format!("summary CSV identical: {csv}, rendered PPM identical: {ppm}, models identical: {models}"))
}

fn main() {
    let cfg = PipelineConfig::default();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("C1", c1_pairwise_model_on_planes()),
        ("C2", c2_settle_on_planes()),
        ("C3", c3_gradients()),
        ("C7", c7_astar_oracle()),
        ("C8", c8_mppi_contracts()),
    ];

    let t = Instant::now();
    let out = run_pipeline(&cfg, 0).unwrap();
    let elapsed = secs(t.elapsed());
    eprint!("{}", summary_table(&out.summaries));
    results.push(("C9", c9_benchmark(&out, elapsed)));
    results.push(("C5", c5_encoder_fidelity(&cfg, &out)));
    results.push(("C6", c6_inference_speed(&cfg, &out)));
    results.push(("C10", c10_hard_mask(&cfg, &out)));
    results.push(("C11", c11_determinism(&cfg, &out)));
    results.push(("C4", c4_learner_skill(&cfg)));

    results.sort_by_key(|(id, _)| id[1..].parse::<u32>().unwrap());
    let mut passed = 0;
    for (id, o) in &results {
        println!("[{}] {id} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        passed += o.pass as usize;
    }
    println!("{passed}/{} criteria passed", results.len());
    if passed < results.len() && std::env::var("TNT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
