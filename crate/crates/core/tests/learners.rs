mod common;

use proptest::prelude::*;
use tnt::dynamics::{Dataset, RecordKind};
use tnt::learn::*;
use tnt::terrain::TerrainPatch;

fn tiny(k: usize, seed: u64) -> Regressor {
    regressor_init(&regressor_arch(5, &[16], k), k, seed).unwrap()
}

fn bumpy_cells(n: usize, phase: f64) -> Vec<f64> {
    (0..n * n).map(|i| 0.05 * ((i as f64) * 0.7 + phase).sin()).collect()
}

#[test]
fn init_is_deterministic_and_shaped() {
    let a = tiny(2, 3);
    assert_eq!(a, tiny(2, 3));
    assert_ne!(a.params(), tiny(2, 4).params());
    let g = a.forward_cells(&bumpy_cells(5, 0.0)).unwrap();
    assert_eq!(g.mu.len() + g.sigma.len(), 4);
    assert_eq!(tiny(4, 3).arch().output, 8);
}

#[test]
fn mismatched_head_is_rejected() {
    let err = regressor_init(&regressor_arch(5, &[16], 2), 4, 0).unwrap_err();
    assert!(err.is_spec());
    assert!(regressor_init(&regressor_arch(5, &[0], 2), 2, 0).unwrap_err().is_spec());
}

#[test]
fn fresh_sigma_is_near_one() {
    for seed in 0..5 {
        let reg = regressor_init(&regressor_arch(25, &[128, 64], 4), 4, seed).unwrap();
        let g = reg.forward_cells(&bumpy_cells(25, seed as f64)).unwrap();
        assert!(g.sigma.iter().all(|&s| (0.5..=2.0).contains(&s)), "{:?}", g.sigma);
    }
}

#[test]
fn constant_offset_does_not_change_outputs() {
    let reg = tiny(4, 1);
    let p = TerrainPatch::from_cells(5, bumpy_cells(5, 1.0), 0.025).unwrap();
    let a = reg.forward(&p).unwrap();
    let b = reg.forward(&p.offset(3.0)).unwrap();
    for (x, y) in a.mu.iter().chain(&a.sigma).zip(b.mu.iter().chain(&b.sigma)) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn wrong_patch_size_is_rejected() {
    assert!(tiny(2, 0).forward_cells(&[0.0; 16]).unwrap_err().is_spec());
}

#[test]
fn nll_hand_values() {
    let (l, dmu, _) = nll_loss(&[0.3, -1.0], &[1.0, 1.0], &[0.3, -1.0]).unwrap();
    assert_eq!(l, 0.0);
    assert_eq!(dmu, vec![0.0, 0.0]);
    let e = std::f64::consts::E;
    let (l, _, _) = nll_loss(&[2.0], &[e], &[2.0]).unwrap();
    assert!((l - 1.0).abs() < 1e-12);
    let s = 0.4f64;
    let (l, _, _) = nll_loss(&[1.0], &[s], &[1.0 + s]).unwrap();
    assert!((l - 0.5 * ((s * s).ln() + 1.0)).abs() < 1e-12);
    assert!(nll_loss(&[f64::NAN], &[1.0], &[0.0]).is_err());
    assert!(nll_loss(&[0.0], &[0.0], &[0.0]).is_err());
}

#[test]
fn nll_gradients_match_finite_differences() {
    let (mu, sg, t) = (0.7, 0.3, -0.2);
    let f = |m: f64, s: f64| nll_loss(&[m], &[s], &[t]).unwrap().0;
    let (_, dmu, ds) = nll_loss(&[mu], &[sg], &[t]).unwrap();
    let h = 1e-6;
    assert!(((f(mu + h, sg) - f(mu - h, sg)) / (2.0 * h) - dmu[0]).abs() < 1e-6);
    assert!(((f(mu, sg + h) - f(mu, sg - h)) / (2.0 * h) - ds[0]).abs() < 1e-5);
}

#[test]
fn grad_check_passes_on_ten_seeds() {
    for seed in 0..10 {
        let reg = tiny(2, seed);
        let err = grad_check(&reg, &bumpy_cells(5, seed as f64), &[0.3, -0.4], 1e-5).unwrap();
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn grad_check_catches_a_corrupted_gradient() {
    let reg = tiny(2, 0);
    let x = bumpy_cells(5, 0.5);
    let mut g = analytic_gradient(&reg, &x, &[0.3, -0.4]);
    let i = g.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
    g[i] *= 1.01;
    assert!(grad_check_against(&reg, &x, &[0.3, -0.4], 1e-5, &g).unwrap() > 1e-3);
}

#[test]
fn grad_check_rejects_bad_epsilon() {
    assert!(grad_check(&tiny(2, 0), &bumpy_cells(5, 0.0), &[0.0, 0.0], 1e-2).is_err());
}

#[test]
fn gradient_vanishes_at_exact_fit_with_floored_sigma() {
    let mut reg = tiny(2, 2);
    let arch = reg.arch().clone();
    let &(w, b, i, _) = arch.layers().last().unwrap();
    let p = reg.params_mut();
    p[w..w + 4 * i].fill(0.0);
    p[b] = 0.25;
    p[b + 1] = -0.5;
    p[b + 2] = -60.0;
    p[b + 3] = -60.0;
    let x = bumpy_cells(5, 0.2);
    let g = reg.forward_cells(&x).unwrap();
    assert!(g.sigma.iter().all(|&s| (s - SIGMA_FLOOR).abs() < 1e-12));
    let a = analytic_gradient(&reg, &x, &[0.25, -0.5]);
    let n = numeric_gradient(&reg, &x, &[0.25, -0.5], 1e-5);
    assert!(a.iter().all(|v| v.abs() < 1e-12));
    assert!(n.iter().all(|v| v.abs() < 1e-6));
}

fn synthetic(count: usize, k: usize, target: impl Fn(usize, &[f64]) -> Vec<f64>) -> Dataset {
    let kind = if k == 2 { RecordKind::Velocity } else { RecordKind::Pose };
    let mut ds = Dataset::new(kind, 5);
    for i in 0..count {
        let x = bumpy_cells(5, i as f64 * 0.37);
        ds.push(&x, &target(i, &x)).unwrap();
    }
    ds
}

#[test]
fn overfits_a_small_dataset() {
    let ds = synthetic(32, 2, |i, x| vec![x[3] * 4.0, (i % 3) as f64 * 0.1]);
    let cfg = TrainConfig {
        lr: 1e-2,
        batch: 32,
        epochs: 300,
        val_fraction: 0.0,
        ..TrainConfig::default()
    };
    let (_, h) = train(&tiny(2, 0), &ds, &cfg).unwrap();
    let (first, last) = (h[0].train_nll, h.last().unwrap().train_nll);
    assert!(last < first - 0.5 * first.abs(), "{first} -> {last}");
    assert_eq!(h.len(), 301);
    assert_eq!(h[0].epoch, 0);
}

#[test]
fn constant_targets_collapse_sigma() {
    let ds = synthetic(64, 2, |_, _| vec![0.4, -0.1]);
    let cfg = TrainConfig {
        lr: 1e-2,
        batch: 64,
        epochs: 400,
        val_fraction: 0.0,
        ..TrainConfig::default()
    };
    let (m, _) = train(&tiny(2, 1), &ds, &cfg).unwrap();
    let g = m.forward_cells(&bumpy_cells(5, 0.0)).unwrap();
    assert!((g.mu[0] - 0.4).abs() < 1e-3 && (g.mu[1] + 0.1).abs() < 1e-3, "{g:?}");
    // Started at σ ≈ 1; the optimum is the floor, approached asymptotically.
    assert!(g.sigma.iter().all(|&s| s < 0.02), "{g:?}");
}

#[test]
fn training_is_deterministic() {
    let ds = synthetic(40, 4, |i, x| vec![x[0], x[1], (i % 2) as f64, 0.0]);
    let cfg = TrainConfig {
        epochs: 5,
        batch: 8,
        ..TrainConfig::default()
    };
    let a = train(&tiny(4, 0), &ds, &cfg).unwrap();
    let b = train(&tiny(4, 0), &ds, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_or_mismatched_dataset_is_a_spec_error() {
    let empty = Dataset::new(RecordKind::Velocity, 5);
    assert!(train(&tiny(2, 0), &empty, &TrainConfig::default()).unwrap_err().is_spec());
    let pose = synthetic(4, 4, |_, _| vec![0.0; 4]);
    assert!(train(&tiny(2, 0), &pose, &TrainConfig::default()).unwrap_err().is_spec());
}

#[test]
fn best_validation_snapshot_is_returned() {
    let ds = synthetic(60, 2, |i, x| vec![x[7] * 3.0 + 0.01 * (i % 5) as f64, x[2]]);
    let cfg = TrainConfig {
        lr: 5e-3,
        batch: 16,
        epochs: 40,
        ..TrainConfig::default()
    };
    let (m, h) = train(&tiny(2, 0), &ds, &cfg).unwrap();
    let (_, val) = split_indices(ds.len(), cfg.val_fraction, cfg.seed);
    let best = h.iter().map(|r| r.val_nll).fold(f64::INFINITY, f64::min);
    assert!((m.mean_nll(&ds, &val).unwrap() - best).abs() < 1e-9);
}

#[test]
fn simulator_data_learners_beat_baseline_and_separate_terrain() {
    let maps = common::mixed_maps(6, 2, common::small_dims());
    let boulders: Vec<_> = maps.iter().step_by(2).cloned().collect();
    let flats: Vec<_> = maps.iter().skip(1).step_by(2).cloned().collect();
    let (dv_rough, _, _) = common::collect(&boulders, 600, 2);
    let (dv_flat, _, _) = common::collect(&flats, 600, 3);
    let mut dv = dv_rough.clone();
    dv.extend(&dv_flat).unwrap();

    let reg = regressor_init(&regressor_arch(25, &[32, 16], 2), 2, 0).unwrap();
    let cfg = TrainConfig {
        epochs: 12,
        ..TrainConfig::default()
    };
    let (m, _) = train(&reg, &dv, &cfg).unwrap();
    let (tr, val) = split_indices(dv.len(), cfg.val_fraction, cfg.seed);
    let base = ConstantBaseline::fit(&dv, &tr).unwrap();
    assert!(m.mean_nll(&dv, &val).unwrap() < base.mean_nll(&dv, &val).unwrap());

    let all = |d: &Dataset| (0..d.len()).collect::<Vec<_>>();
    let sr = m.mean_sigma(&dv_rough, &all(&dv_rough)).unwrap();
    let sf = m.mean_sigma(&dv_flat, &all(&dv_flat)).unwrap();
    assert!(sf[0] < sr[0], "flat σ {sf:?} vs rough σ {sr:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sigma_is_always_positive(seed in 0u64..1000, scale in -5.0f64..5.0, amp in 0.0f64..2.0) {
        let mut reg = tiny(4, seed);
        reg.params_mut().iter_mut().for_each(|p| *p *= scale);
        let g = reg.forward_cells(&bumpy_cells(5, amp * 10.0).iter().map(|h| h * amp * 20.0).collect::<Vec<_>>()).unwrap();
        prop_assert!(g.sigma.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn gradient_check_holds_for_random_points(seed in 0u64..1000, t0 in -1.0f64..1.0, t1 in -1.0f64..1.0) {
        let reg = tiny(2, seed);
        let err = grad_check(&reg, &bumpy_cells(5, seed as f64 * 0.1), &[t0, t1], 1e-5).unwrap();
        prop_assert!(err < 1e-4, "{}", err);
    }
}
