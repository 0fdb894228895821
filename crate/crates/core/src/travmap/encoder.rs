//! Map-wise reconstruction of the channel stack from an elevation map.
//!
//! The map is pooled into `pool × pool` blocks. Each block is described by
//! the mean (relative to the center block) and standard deviation of heights
//! in a `(2r+1)²` window of blocks around it; a shared network maps that
//! descriptor to the 14 normalized channels of the block center, and the
//! coarse result is bilinearly upsampled to full resolution. Training
//! minimizes the mean absolute normalized channel error over valid cells,
//! backpropagated through the upsampling.

use ndarray::Array2;
use rand::seq::SliceRandom;

use super::channels::{CombineWeights, CHANNELS, SIGMA_CHANNELS};
use super::map::{valid_mask, TraversabilityMap};
use crate::error::{Result, TntError};
use crate::learn::{Arch, Optimizer, OptimizerKind};
use crate::seed;
use crate::terrain::{ElevationMap, PatchSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub pool: usize,
    pub radius: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub height_scale: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            pool: 4,
            radius: 3,
            hidden: vec![64, 32],
            lr: 3e-3,
            epochs: 150,
            seed: 0,
            height_scale: 0.1,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pool == 0 {
            return Err(TntError::spec("encoder pool factor must be positive"));
        }
        if !(self.lr > 0.0) || !(self.height_scale > 0.0) {
            return Err(TntError::spec("encoder learning rate and height scale must be positive"));
        }
        Ok(())
    }

    pub fn feature_len(&self) -> usize {
        2 * (2 * self.radius + 1).pow(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEncoder {
    pub(crate) arch: Arch,
    pub(crate) params: Vec<f64>,
    pub(crate) pool: usize,
    pub(crate) radius: usize,
    pub(crate) height_scale: f64,
    pub(crate) resolution: f64,
    pub(crate) spec: PatchSpec,
    pub(crate) chan_mean: [f64; CHANNELS],
    pub(crate) chan_scale: [f64; CHANNELS],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderLoss {
    pub epoch: usize,
    /// Mean absolute error in normalized channel units over valid cells.
    pub train_l1: f64,
}

/// Bilinear interpolation table along one axis: fine index → (lo, hi, t).
fn upsample_axis(fine: usize, coarse: usize, pool: usize) -> Vec<(usize, usize, f64)> {
    (0..fine)
        .map(|m| {
            if coarse == 1 {
                return (0, 0, 0.0);
            }
            let u = ((m as f64 + 0.5) / pool as f64 - 0.5).clamp(0.0, (coarse - 1) as f64);
            let lo = (u.floor() as usize).min(coarse - 2);
            (lo, lo + 1, u - lo as f64)
        })
        .collect()
}

struct Layout {
    rows: usize,
    cols: usize,
    crows: usize,
    ccols: usize,
    up_r: Vec<(usize, usize, f64)>,
    up_c: Vec<(usize, usize, f64)>,
}

impl Layout {
    fn new(rows: usize, cols: usize, pool: usize) -> Self {
        let crows = rows.div_ceil(pool);
        let ccols = cols.div_ceil(pool);
        Self {
            rows,
            cols,
            crows,
            ccols,
            up_r: upsample_axis(rows, crows, pool),
            up_c: upsample_axis(cols, ccols, pool),
        }
    }

    /// Coarse cells and weights contributing to fine cell `(m, n)`.
    fn taps(&self, m: usize, n: usize) -> [(usize, f64); 4] {
        let (r0, r1, tr) = self.up_r[m];
        let (c0, c1, tc) = self.up_c[n];
        [
            (r0 * self.ccols + c0, (1.0 - tr) * (1.0 - tc)),
            (r0 * self.ccols + c1, (1.0 - tr) * tc),
            (r1 * self.ccols + c0, tr * (1.0 - tc)),
            (r1 * self.ccols + c1, tr * tc),
        ]
    }
}

fn features(map: &ElevationMap, pool: usize, radius: usize, height_scale: f64) -> (Layout, Array2<f64>) {
    let lay = Layout::new(map.rows(), map.cols(), pool);
    let (cr, cc) = (lay.crows, lay.ccols);
    let mut mean = vec![0.0; cr * cc];
    let mut std = vec![0.0; cr * cc];
    for i in 0..cr {
        for j in 0..cc {
            let (mut s, mut s2, mut k) = (0.0, 0.0, 0.0);
            for m in i * pool..((i + 1) * pool).min(lay.rows) {
                for n in j * pool..((j + 1) * pool).min(lay.cols) {
                    let h = map.at(m, n);
                    s += h;
                    s2 += h * h;
                    k += 1.0;
                }
            }
            let mu = s / k;
            mean[i * cc + j] = mu;
            std[i * cc + j] = (s2 / k - mu * mu).max(0.0).sqrt();
        }
    }
    let r = radius as isize;
    let width = 2 * (2 * radius + 1).pow(2);
    let inv = 1.0 / height_scale;
    let mut x = Array2::zeros((cr * cc, width));
    for i in 0..cr {
        for j in 0..cc {
            let center = mean[i * cc + j];
            let mut row = x.row_mut(i * cc + j);
            let mut f = 0;
            for di in -r..=r {
                let ii = (i as isize + di).clamp(0, cr as isize - 1) as usize;
                for dj in -r..=r {
                    let jj = (j as isize + dj).clamp(0, cc as isize - 1) as usize;
                    row[f] = (mean[ii * cc + jj] - center) * inv;
                    row[f + 1] = std[ii * cc + jj] * inv;
                    f += 2;
                }
            }
        }
    }
    (lay, x)
}

struct Sample {
    lay: Layout,
    x: Array2<f64>,
    /// Valid fine cells with their normalized targets.
    cells: Vec<(usize, usize, [f64; CHANNELS])>,
}

impl MapEncoder {
    pub fn pool(&self) -> usize {
        self.pool
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn patch_spec(&self) -> &PatchSpec {
        &self.spec
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn coarse(&self, x: Array2<f64>) -> Array2<f64> {
        self.arch.forward(&self.params, x).output().clone()
    }

    /// Normalized fine-cell prediction from coarse outputs.
    fn upsample_cell(lay: &Layout, y: &Array2<f64>, m: usize, n: usize) -> [f64; CHANNELS] {
        let mut out = [0.0; CHANNELS];
        for (idx, wt) in lay.taps(m, n) {
            if wt != 0.0 {
                let row = y.row(idx);
                for c in 0..CHANNELS {
                    out[c] += wt * row[c];
                }
            }
        }
        out
    }

    /// Mean absolute normalized error and its gradient w.r.t. the parameters.
    fn loss_and_grad(&self, s: &Sample) -> (f64, Vec<f64>) {
        let tape = self.arch.forward(&self.params, s.x.clone());
        let y = tape.output();
        let mut d = Array2::zeros(y.raw_dim());
        let norm = 1.0 / (s.cells.len() * CHANNELS) as f64;
        let mut loss = 0.0;
        for &(m, n, ref t) in &s.cells {
            let p = Self::upsample_cell(&s.lay, y, m, n);
            let taps = s.lay.taps(m, n);
            for c in 0..CHANNELS {
                let e = p[c] - t[c];
                loss += e.abs();
                let g = norm * e.signum();
                for &(idx, wt) in &taps {
                    d[[idx, c]] += g * wt;
                }
            }
        }
        let grad = self.arch.backward(&self.params, &tape, d);
        (loss * norm, grad)
    }

    fn sample_loss(&self, s: &Sample) -> f64 {
        let y = self.coarse(s.x.clone());
        let mut loss = 0.0;
        for &(m, n, ref t) in &s.cells {
            let p = Self::upsample_cell(&s.lay, &y, m, n);
            loss += p.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        loss / (s.cells.len() * CHANNELS) as f64
    }
}

/// Fits an encoder to `(elevation map, label map)` pairs. All maps must share
/// dimensions and resolution, and each label map must match its elevation map.
pub fn train_encoder(
    pairs: &[(ElevationMap, TraversabilityMap)],
    spec: &PatchSpec,
    cfg: &EncoderConfig,
) -> Result<(MapEncoder, Vec<EncoderLoss>)> {
    cfg.validate()?;
    spec.validate()?;
    let (first, _) = pairs.first().ok_or_else(|| TntError::spec("encoder training needs at least one map"))?;
    for (i, (map, tm)) in pairs.iter().enumerate() {
        if !tm.matches(map) {
            return Err(TntError::spec(format!("label map {i} does not match its elevation map")));
        }
        if map.rows() != first.rows() || map.cols() != first.cols() || map.resolution() != first.resolution() {
            return Err(TntError::spec(format!("map {i} differs in size or resolution from map 0")));
        }
        if tm.valid_count() == 0 {
            return Err(TntError::spec(format!("label map {i} has no valid cells")));
        }
    }

    // Channel normalization over every valid training cell.
    let mut sum = [0.0; CHANNELS];
    let mut sum2 = [0.0; CHANNELS];
    let mut count = 0.0;
    for (_, tm) in pairs {
        for m in 0..tm.rows() {
            for n in 0..tm.cols() {
                if tm.is_valid(m, n) {
                    let v = tm.channel_vector(m, n).0;
                    for c in 0..CHANNELS {
                        sum[c] += v[c];
                        sum2[c] += v[c] * v[c];
                    }
                    count += 1.0;
                }
            }
        }
    }
    let chan_mean: [f64; CHANNELS] = std::array::from_fn(|c| sum[c] / count);
    let chan_scale: [f64; CHANNELS] = std::array::from_fn(|c| {
        let s = (sum2[c] / count - chan_mean[c].powi(2)).max(0.0).sqrt();
        if s > 1e-12 {
            s
        } else {
            1.0
        }
    });

    let samples: Vec<Sample> = pairs
        .iter()
        .map(|(map, tm)| {
            let (lay, x) = features(map, cfg.pool, cfg.radius, cfg.height_scale);
            let mut cells = Vec::with_capacity(tm.valid_count());
            for m in 0..tm.rows() {
                for n in 0..tm.cols() {
                    if tm.is_valid(m, n) {
                        let v = tm.channel_vector(m, n).0;
                        cells.push((m, n, std::array::from_fn(|c| (v[c] - chan_mean[c]) / chan_scale[c])));
                    }
                }
            }
            Sample { lay, x, cells }
        })
        .collect();

    let arch = Arch::new(cfg.feature_len(), &cfg.hidden, CHANNELS);
    arch.validate()?;
    let mut rng = seed::child_rng(cfg.seed, "encoder", 0);
    let mut enc = MapEncoder {
        params: arch.init(&mut rng),
        arch,
        pool: cfg.pool,
        radius: cfg.radius,
        height_scale: cfg.height_scale,
        resolution: first.resolution(),
        spec: spec.clone(),
        chan_mean,
        chan_scale,
    };

    let mean_loss = |e: &MapEncoder| samples.iter().map(|s| e.sample_loss(s)).sum::<f64>() / samples.len() as f64;
    let mut history = vec![EncoderLoss {
        epoch: 0,
        train_l1: mean_loss(&enc),
    }];
    let mut opt = Optimizer::new(OptimizerKind::Adam, cfg.lr, enc.params.len());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (l, g) = enc.loss_and_grad(&samples[i]);
            total += l;
            opt.step(&mut enc.params, &g);
        }
        if !total.is_finite() {
            return Err(TntError::Numeric(format!("encoder training diverged at epoch {epoch}")));
        }
        history.push(EncoderLoss {
            epoch,
            train_l1: mean_loss(&enc),
        });
    }
    Ok((enc, history))
}

/// One pass of the encoder over a whole elevation map.
pub fn infer_map(enc: &MapEncoder, map: &ElevationMap, weights: &CombineWeights) -> Result<TraversabilityMap> {
    weights.validate()?;
    if (map.resolution() - enc.resolution).abs() > 1e-12 * enc.resolution {
        return Err(TntError::spec(format!(
            "map resolution {} differs from the encoder's {}",
            map.resolution(),
            enc.resolution
        )));
    }
    let (lay, x) = features(map, enc.pool, enc.radius, enc.height_scale);
    let y = enc.coarse(x);
    let valid = valid_mask(map, &enc.spec);
    let hw = map.rows() * map.cols();
    let mut channels = vec![0.0; CHANNELS * hw];
    for m in 0..map.rows() {
        for n in 0..map.cols() {
            let i = m * map.cols() + n;
            if !valid[i] {
                continue;
            }
            let p = MapEncoder::upsample_cell(&lay, &y, m, n);
            for c in 0..CHANNELS {
                let mut v = enc.chan_mean[c] + enc.chan_scale[c] * p[c];
                if c < 2 {
                    v = v.max(0.0);
                } else if SIGMA_CHANNELS.contains(&c) {
                    v = v.max(1e-6);
                }
                channels[c * hw + i] = v;
            }
        }
    }
    TraversabilityMap::from_channels(map.rows(), map.cols(), map.resolution(), map.origin(), channels, valid, *weights)
}
