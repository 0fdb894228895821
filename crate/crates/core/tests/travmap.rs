use proptest::prelude::*;
use tnt::dynamics::VehicleGeometry;
use tnt::learn::{regressor_arch, regressor_init, Regressor};
use tnt::terrain::{generate_terrain, ElevationMap, MapDims, PatchSpec, TerrainGenSpec};
use tnt::travmap::*;

const P: usize = 15;

fn regressors(seed: u64) -> (Regressor, Regressor) {
    (
        regressor_init(&regressor_arch(P, &[12], 2), 2, seed).unwrap(),
        regressor_init(&regressor_arch(P, &[12], 4), 4, seed + 1).unwrap(),
    )
}

fn terrain(seed: u64, rows: usize, cols: usize, res: f64) -> ElevationMap {
    let dims = MapDims {
        rows,
        cols,
        resolution: res,
    };
    generate_terrain(&TerrainGenSpec::boulder_field(), seed, dims).unwrap()
}

fn no_mean_weights() -> CombineWeights {
    let mut a = CombineWeights::default().as_array();
    for c in MEAN_CHANNELS {
        a[c] = 0.0;
    }
    CombineWeights::from_array(a)
}

fn weights_strategy() -> impl Strategy<Value = CombineWeights> {
    prop::array::uniform14(0.0f64..2.0).prop_map(|mut a| {
        a[0] += 0.1;
        CombineWeights::from_array(a)
    })
}

fn labels(map: &ElevationMap, seed: u64) -> TraversabilityMap {
    let (v, p) = regressors(seed);
    let spec = PatchSpec::new(P, PatchSpec::default().angles).unwrap();
    build_label_map_strided(map, &spec, &VehicleGeometry::default(), &v, &p, &CombineWeights::default(), 2).unwrap()
}

#[test]
fn single_zero_angle_labels_are_the_patch_channels() {
    let map = terrain(4, 32, 28, 0.025);
    let (v, p) = regressors(9);
    let geom = VehicleGeometry::default();
    let spec = PatchSpec::new(P, vec![0.0]).unwrap();
    let w = CombineWeights::default();
    let tm = build_label_map_strided(&map, &spec, &geom, &v, &p, &w, 1).unwrap();
    for m in 7..25 {
        for n in 7..21 {
            assert!(tm.is_valid(m, n));
            let want = patch_channels(&map.extract_patch(m, n, 0.0, &spec).unwrap(), &geom, &v, &p).unwrap();
            let got = tm.channel_vector(m, n);
            for c in 0..CHANNELS {
                assert!((got.0[c] - want.0[c]).abs() < 1e-9, "({m},{n}) channel {c}");
            }
            assert!((tm.combined_at(m, n) - combine(&want, &w)).abs() < 1e-9);
        }
    }
    assert!(!tm.is_valid(6, 10) && !tm.is_valid(10, 21));
}

#[test]
fn label_values_are_bounded_by_per_angle_values() {
    let map = terrain(8, 32, 28, 0.025);
    let (v, p) = regressors(2);
    let geom = VehicleGeometry::default();
    let spec = PatchSpec::new(P, PatchSpec::default().angles).unwrap();
    for (w, exact) in [(CombineWeights::default(), false), (no_mean_weights(), true)] {
        let tm = build_label_map_strided(&map, &spec, &geom, &v, &p, &w, 1).unwrap();
        for m in (10..22).step_by(3) {
            for n in (10..18).step_by(3) {
                let per_angle: Vec<f64> = spec
                    .angles
                    .iter()
                    .map(|&a| combine(&patch_channels(&map.extract_patch(m, n, a, &spec).unwrap(), &geom, &v, &p).unwrap(), &w))
                    .collect();
                let mean = per_angle.iter().sum::<f64>() / per_angle.len() as f64;
                let lo = per_angle.iter().copied().fold(f64::INFINITY, f64::min);
                let got = tm.combined_at(m, n);
                assert!(got <= mean + 1e-9, "({m},{n}) {got} > {mean}");
                if exact {
                    assert!((got - mean).abs() < 1e-9);
                    assert!(got >= lo - 1e-9);
                }
            }
        }
    }
}

#[test]
fn strided_labels_match_dense_on_the_lattice() {
    let map = terrain(3, 36, 30, 0.025);
    let (v, p) = regressors(5);
    let geom = VehicleGeometry::default();
    let spec = PatchSpec::new(P, PatchSpec::default().angles).unwrap();
    let w = CombineWeights::default();
    let dense = build_label_map_strided(&map, &spec, &geom, &v, &p, &w, 1).unwrap();
    let sparse = build_label_map_strided(&map, &spec, &geom, &v, &p, &w, 2).unwrap();
    assert_eq!(dense.valid_mask(), sparse.valid_mask());
    // Valid cells start at 10 here, so even offsets from 10 are lattice cells.
    for m in (10..26).step_by(2) {
        for n in (10..20).step_by(2) {
            assert!((dense.combined_at(m, n) - sparse.combined_at(m, n)).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combination_is_linear_in_the_weights(
        ch in prop::array::uniform14(-1.0f64..1.0),
        wa in weights_strategy(),
        wb in weights_strategy(),
        a in 0.0f64..3.0,
        b in 0.0f64..3.0,
    ) {
        let ch = ChannelVector(ch);
        let mixed = CombineWeights::from_array(std::array::from_fn(|c| a * wa.as_array()[c] + b * wb.as_array()[c]));
        let want = a * combine(&ch, &wa) + b * combine(&ch, &wb);
        prop_assert!((combine(&ch, &mixed) - want).abs() < 1e-9);
    }

    #[test]
    fn combination_is_monotone_in_each_channel_magnitude(
        ch in prop::array::uniform14(-1.0f64..1.0),
        w in weights_strategy(),
        c in 0usize..CHANNELS,
        d in 0.0f64..1.0,
    ) {
        let base = ChannelVector(ch.map(f64::abs));
        let mut up = base;
        up.0[c] += d;
        prop_assert!(combine(&up, &w) >= combine(&base, &w) - 1e-12);
    }

    #[test]
    fn recombining_scales_with_the_weights(seed in 0u64..50, alpha in 0.1f64..5.0) {
        let tm = labels(&terrain(seed, 32, 32, 0.025), seed);
        let scaled = tm.recombine(tm.weights().scaled(alpha)).unwrap();
        for (a, b) in tm.combined().iter().zip(scaled.combined()) {
            prop_assert!((b - alpha * a).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn masked_set_shrinks_as_the_threshold_rises(seed in 0u64..50, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let tm = labels(&terrain(seed, 32, 32, 0.025), seed);
        let (lo, hi) = tm.valid_range().unwrap();
        let (a, b) = (t1.min(t2), t1.max(t2));
        let (ta, tb) = (lo + a * (hi - lo), lo + b * (hi - lo));
        for (i, &v) in tm.combined().iter().enumerate() {
            if tm.valid_mask()[i] && v > tb {
                prop_assert!(v > ta);
            }
        }
        let count = |t: f64| tm.combined().iter().filter(|&&v| v > t).count();
        prop_assert!(count(tb) <= count(ta));
    }
}

#[test]
fn tmap_round_trip_keeps_f32_values() {
    let tm = labels(&terrain(1, 32, 28, 0.025), 1);
    let back = decode_tmap(&encode_tmap(&tm)).unwrap();
    assert_eq!((back.rows(), back.cols()), (32, 28));
    assert_eq!(back.valid_mask(), tm.valid_mask());
    for (a, b) in tm.channels().iter().zip(back.channels()) {
        assert_eq!(*a as f32 as f64, *b);
    }
    assert_eq!(encode_tmap(&back), encode_tmap(&tm));
}

fn pairs(count: usize) -> Vec<(ElevationMap, TraversabilityMap)> {
    (0..count as u64)
        .map(|s| {
            let map = terrain(20 + s, 40, 32, 0.025);
            let tm = labels(&map, 3);
            (map, tm)
        })
        .collect()
}

fn small_encoder() -> EncoderConfig {
    EncoderConfig {
        pool: 4,
        radius: 2,
        hidden: vec![16],
        epochs: 60,
        ..EncoderConfig::default()
    }
}

#[test]
fn encoder_training_is_deterministic_and_learns() {
    let data = pairs(3);
    let spec = PatchSpec::new(P, PatchSpec::default().angles).unwrap();
    let (a, la) = train_encoder(&data, &spec, &small_encoder()).unwrap();
    let (b, lb) = train_encoder(&data, &spec, &small_encoder()).unwrap();
    assert_eq!(a, b);
    assert_eq!(la, lb);
    assert_eq!(la.len(), 61);
    let first = la[0].train_l1;
    let last = la.last().unwrap().train_l1;
    assert!(last < 0.8 * first, "{first} -> {last}");

    let w = CombineWeights::default();
    let tm = infer_map(&a, &data[0].0, &w).unwrap();
    assert_eq!(tm.valid_mask(), data[0].1.valid_mask());
    assert_eq!(infer_map(&a, &data[0].0, &w).unwrap(), tm);
    assert_eq!(decode_encoder(&encode_encoder(&a)).unwrap(), a);
}

#[test]
fn encoder_rejects_bad_inputs() {
    let spec = PatchSpec::new(P, PatchSpec::default().angles).unwrap();
    assert!(train_encoder(&[], &spec, &small_encoder()).unwrap_err().is_spec());

    let mut data = pairs(1);
    let other = terrain(99, 40, 32, 0.025);
    let mismatched = vec![(other.clone(), labels(&terrain(98, 36, 32, 0.025), 0))];
    assert!(train_encoder(&mismatched, &spec, &small_encoder()).unwrap_err().is_spec());

    let cfg = EncoderConfig {
        epochs: 2,
        ..small_encoder()
    };
    let (enc, _) = train_encoder(&data, &spec, &cfg).unwrap();
    let coarse = terrain(1, 40, 32, 0.05);
    assert!(infer_map(&enc, &coarse, &CombineWeights::default()).unwrap_err().is_spec());

    data.push((terrain(7, 40, 32, 0.05), labels(&terrain(7, 40, 32, 0.05), 0)));
    assert!(train_encoder(&data, &spec, &cfg).unwrap_err().is_spec());
}
