//! Gaussian regressor from a terrain patch to `k` target components.
//!
//! The network sees the mean-centered patch divided by a global height scale
//! and emits `2k` raw values `(m, s)`. In target units
//! `μ = target_mean + target_scale * m` and
//! `σ = sigma_floor + target_scale * exp(s)`.

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;

use super::mlp::{gather_rows, row_vector, Arch, Optimizer, OptimizerKind};
use crate::dynamics::Dataset;
use crate::error::{Result, TntError};
use crate::seed;
use crate::terrain::TerrainPatch;

pub const SIGMA_FLOOR: f64 = 1e-3;
pub const DEFAULT_HEIGHT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    arch: Arch,
    k: usize,
    params: Vec<f64>,
    height_scale: f64,
    sigma_floor: f64,
    target_mean: Vec<f64>,
    target_scale: Vec<f64>,
}

/// Per-component Gaussian prediction in target units.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Architecture for a `patch_cells` square input and `k` targets.
pub fn regressor_arch(patch_cells: usize, hidden: &[usize], k: usize) -> Arch {
    Arch::new(patch_cells * patch_cells, hidden, 2 * k)
}

/// Deterministic initialization. The log-σ head starts at zero so every
/// fresh regressor predicts σ ≈ 1.
pub fn regressor_init(arch: &Arch, k: usize, seed: u64) -> Result<Regressor> {
    arch.validate()?;
    if k == 0 || arch.output != 2 * k {
        return Err(TntError::spec(format!(
            "regressor with {k} targets needs {} outputs, architecture has {}",
            2 * k,
            arch.output
        )));
    }
    let mut rng = seed::child_rng(seed, "regressor-init", k as u64);
    let mut params = arch.init(&mut rng);
    let &(w, b, i, o) = arch.layers().last().expect("at least one layer");
    for row in k..o {
        params[w + row * i..w + (row + 1) * i].fill(0.0);
        params[b + row] = 0.0;
    }
    Ok(Regressor {
        arch: arch.clone(),
        k,
        params,
        height_scale: DEFAULT_HEIGHT_SCALE,
        sigma_floor: SIGMA_FLOOR,
        target_mean: vec![0.0; k],
        target_scale: vec![1.0; k],
    })
}

/// Gaussian NLL for one target vector: `Σ ½(log σ² + (μ − t)²/σ²)`, with
/// its gradients with respect to `μ` and `σ`.
pub fn nll_loss(mu: &[f64], sigma: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if mu.len() != sigma.len() || mu.len() != target.len() {
        return Err(TntError::spec("nll_loss arguments differ in length"));
    }
    let mut loss = 0.0;
    let mut dmu = Vec::with_capacity(mu.len());
    let mut dsigma = Vec::with_capacity(mu.len());
    for ((&m, &s), &t) in mu.iter().zip(sigma).zip(target) {
        if !(m.is_finite() && s.is_finite() && t.is_finite()) {
            return Err(TntError::Numeric("non-finite input to nll_loss".into()));
        }
        if !(s > 0.0) {
            return Err(TntError::Numeric(format!("σ must be positive, got {s}")));
        }
        let r = m - t;
        let v = s * s;
        loss += 0.5 * (v.ln() + r * r / v);
        dmu.push(r / v);
        dsigma.push(1.0 / s - r * r / (v * s));
    }
    Ok((loss, dmu, dsigma))
}

impl Regressor {
    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn height_scale(&self) -> f64 {
        self.height_scale
    }

    pub fn sigma_floor(&self) -> f64 {
        self.sigma_floor
    }

    pub fn target_mean(&self) -> &[f64] {
        &self.target_mean
    }

    pub fn target_scale(&self) -> &[f64] {
        &self.target_scale
    }

    pub fn patch_cells(&self) -> usize {
        (self.arch.input as f64).sqrt().round() as usize
    }

    pub(crate) fn from_parts(
        arch: Arch,
        k: usize,
        params: Vec<f64>,
        height_scale: f64,
        sigma_floor: f64,
        target_mean: Vec<f64>,
        target_scale: Vec<f64>,
    ) -> Result<Self> {
        if arch.output != 2 * k || params.len() != arch.param_count() {
            return Err(TntError::format("regressor parameters do not match architecture"));
        }
        if target_mean.len() != k || target_scale.len() != k {
            return Err(TntError::format("regressor normalization has wrong length"));
        }
        if !(height_scale > 0.0) || !(sigma_floor > 0.0) || target_scale.iter().any(|&s| !(s > 0.0)) {
            return Err(TntError::format("regressor scales must be positive"));
        }
        Ok(Self {
            arch,
            k,
            params,
            height_scale,
            sigma_floor,
            target_mean,
            target_scale,
        })
    }

    /// Mean-centered, scaled copy of each row.
    fn normalize_inputs(&self, mut x: Array2<f64>) -> Array2<f64> {
        let inv = 1.0 / self.height_scale;
        for mut row in x.axis_iter_mut(Axis(0)) {
            let mean = row.sum() / row.len() as f64;
            row.mapv_inplace(|h| (h - mean) * inv);
        }
        x
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.arch.input {
            return Err(TntError::spec(format!(
                "patch has {width} cells, regressor expects {}",
                self.arch.input
            )));
        }
        Ok(())
    }

    pub fn forward(&self, patch: &TerrainPatch) -> Result<Gaussian> {
        self.forward_cells(patch.cells())
    }

    pub fn forward_cells(&self, cells: &[f64]) -> Result<Gaussian> {
        let (mu, sigma) = self.predict_batch(row_vector(cells))?;
        Ok(Gaussian {
            mu: mu.row(0).to_vec(),
            sigma: sigma.row(0).to_vec(),
        })
    }

    /// Batched prediction over raw patches, one per row. Returns `(μ, σ)`
    /// arrays of shape `(batch, k)`.
    pub fn predict_batch(&self, patches: Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_width(patches.ncols())?;
        let tape = self.arch.forward(&self.params, self.normalize_inputs(patches));
        Ok(self.heads(tape.output()))
    }

    fn heads(&self, raw: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let k = self.k;
        let mut mu = raw.slice(s![.., ..k]).to_owned();
        let mut sigma = raw.slice(s![.., k..]).to_owned();
        for c in 0..k {
            let (m, sc) = (self.target_mean[c], self.target_scale[c]);
            mu.column_mut(c).mapv_inplace(|v| m + sc * v);
            sigma
                .column_mut(c)
                .mapv_inplace(|v| self.sigma_floor + sc * v.exp());
        }
        (mu, sigma)
    }

    /// Summed NLL over the batch and its parameter gradient.
    pub fn loss_and_grad(&self, patches: Array2<f64>, targets: &Array2<f64>) -> (f64, Vec<f64>) {
        let tape = self.arch.forward(&self.params, self.normalize_inputs(patches));
        let raw = tape.output();
        let (mu, sigma) = self.heads(raw);
        let k = self.k;
        let mut d_out = Array2::zeros(raw.raw_dim());
        let mut loss = 0.0;
        for r in 0..raw.nrows() {
            for c in 0..k {
                let (m, sg, t) = (mu[[r, c]], sigma[[r, c]], targets[[r, c]]);
                let e = m - t;
                let v = sg * sg;
                loss += 0.5 * (v.ln() + e * e / v);
                let sc = self.target_scale[c];
                d_out[[r, c]] = e / v * sc;
                d_out[[r, k + c]] = (1.0 / sg - e * e / (v * sg)) * sc * raw[[r, k + c]].exp();
            }
        }
        let grad = self.arch.backward(&self.params, &tape, d_out);
        (loss, grad)
    }

    fn dataset_batch(&self, ds: &Dataset, idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let x = gather_rows(ds.patches_flat(), ds.patch_len(), idx);
        let y = gather_rows(ds.targets_flat(), ds.target_len(), idx);
        (x, y)
    }

    /// Mean per-sample NLL over the given records.
    pub fn mean_nll(&self, ds: &Dataset, idx: &[usize]) -> Result<f64> {
        self.check_dataset(ds)?;
        if idx.is_empty() {
            return Err(TntError::spec("cannot evaluate NLL on zero samples"));
        }
        let mut total = 0.0;
        for chunk in idx.chunks(EVAL_CHUNK) {
            let (x, y) = self.dataset_batch(ds, chunk);
            let (mu, sigma) = self.predict_batch(x)?;
            for r in 0..chunk.len() {
                let (l, _, _) = nll_loss(
                    mu.row(r).as_slice().expect("row"),
                    sigma.row(r).as_slice().expect("row"),
                    y.row(r).as_slice().expect("row"),
                )?;
                total += l;
            }
        }
        Ok(total / idx.len() as f64)
    }

    /// Fraction of target components inside `μ ± z σ`.
    pub fn coverage(&self, ds: &Dataset, idx: &[usize], z: f64) -> Result<f64> {
        self.check_dataset(ds)?;
        if idx.is_empty() {
            return Err(TntError::spec("cannot evaluate coverage on zero samples"));
        }
        let mut inside = 0usize;
        for chunk in idx.chunks(EVAL_CHUNK) {
            let (x, y) = self.dataset_batch(ds, chunk);
            let (mu, sigma) = self.predict_batch(x)?;
            ndarray::Zip::from(&mu).and(&sigma).and(&y).for_each(|&m, &s, &t| {
                if (t - m).abs() <= z * s {
                    inside += 1;
                }
            });
        }
        Ok(inside as f64 / (idx.len() * self.k) as f64)
    }

    /// Mean predicted σ per component over the given records.
    pub fn mean_sigma(&self, ds: &Dataset, idx: &[usize]) -> Result<Vec<f64>> {
        self.check_dataset(ds)?;
        let mut acc = vec![0.0; self.k];
        for chunk in idx.chunks(EVAL_CHUNK) {
            let (x, _) = self.dataset_batch(ds, chunk);
            let (_, sigma) = self.predict_batch(x)?;
            for (a, col) in acc.iter_mut().zip(sigma.columns()) {
                *a += col.sum();
            }
        }
        Ok(acc.into_iter().map(|a| a / idx.len().max(1) as f64).collect())
    }

    fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.target_len() != self.k {
            return Err(TntError::spec(format!(
                "dataset targets have {} components, regressor predicts {}",
                ds.target_len(),
                self.k
            )));
        }
        self.check_width(ds.patch_len())
    }
}

const EVAL_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch: 128,
            epochs: 30,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            val_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(TntError::spec("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(TntError::spec("validation fraction must lie in [0, 1)"));
        }
        if self.batch == 0 {
            return Err(TntError::spec("batch size must be positive"));
        }
        Ok(())
    }
}

/// One line of the loss history; epoch 0 is the model before any update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: f64,
}

/// Deterministic train/validation split of `n` records.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::child_rng(seed, "split", 0));
    let n_val = ((n as f64) * val_fraction).round() as usize;
    let n_val = if val_fraction > 0.0 { n_val.clamp(1, n.saturating_sub(1)) } else { 0 };
    let val = idx.split_off(n - n_val);
    (idx, val)
}

/// Trains on the dataset and returns the best-validation snapshot with its
/// loss history. Without a validation split the training NLL stands in for
/// the validation NLL.
pub fn train(reg: &Regressor, ds: &Dataset, cfg: &TrainConfig) -> Result<(Regressor, Vec<LossRecord>)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(TntError::spec("training dataset is empty"));
    }
    reg.check_dataset(ds)?;
    if ds.len() < 2 && cfg.val_fraction > 0.0 {
        return Err(TntError::spec("need at least two records for a validation split"));
    }
    let (train_idx, val_idx) = split_indices(ds.len(), cfg.val_fraction, cfg.seed);

    let mut model = reg.clone();
    let (mean, scale) = target_stats(ds, &train_idx);
    model.target_mean = mean;
    model.target_scale = scale.into_iter().map(|s| if s > 1e-12 { s } else { 1.0 }).collect();

    let eval = |m: &Regressor| -> Result<(f64, f64)> {
        let tr = m.mean_nll(ds, &train_idx)?;
        let va = if val_idx.is_empty() { tr } else { m.mean_nll(ds, &val_idx)? };
        Ok((tr, va))
    };
    let (tr0, va0) = eval(&model)?;
    let mut history = vec![LossRecord {
        epoch: 0,
        train_nll: tr0,
        val_nll: va0,
    }];
    let mut best = (va0, model.clone());

    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, model.params.len());
    let mut rng = seed::child_rng(cfg.seed, "train-shuffle", 0);
    let mut order = train_idx.clone();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch) {
            let (x, y) = model.dataset_batch(ds, batch);
            let (_, mut grad) = model.loss_and_grad(x, &y);
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            opt.step(&mut model.params, &grad);
        }
        let (tr, va) = eval(&model)?;
        if !tr.is_finite() {
            return Err(TntError::Numeric(format!("training diverged at epoch {epoch}")));
        }
        history.push(LossRecord {
            epoch,
            train_nll: tr,
            val_nll: va,
        });
        if va < best.0 {
            best = (va, model.clone());
        }
    }
    Ok((best.1, history))
}

fn target_stats(ds: &Dataset, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let k = ds.target_len();
    let mut mean = vec![0.0; k];
    for &i in idx {
        for (m, &t) in mean.iter_mut().zip(ds.target(i)) {
            *m += t as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= idx.len() as f64);
    let mut var = vec![0.0; k];
    for &i in idx {
        for ((v, &t), m) in var.iter_mut().zip(ds.target(i)).zip(&mean) {
            *v += (t as f64 - m).powi(2);
        }
    }
    let std = var.into_iter().map(|v| (v / idx.len() as f64).sqrt()).collect();
    (mean, std)
}

/// Target-independent Gaussian: the global mean and spread of each component.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantBaseline {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ConstantBaseline {
    pub fn fit(ds: &Dataset, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(TntError::spec("baseline needs at least one record"));
        }
        let (mu, sigma) = target_stats(ds, idx);
        let sigma = sigma.into_iter().map(|s| s.max(SIGMA_FLOOR)).collect();
        Ok(Self { mu, sigma })
    }

    pub fn mean_nll(&self, ds: &Dataset, idx: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &i in idx {
            let t: Vec<f64> = ds.target(i).iter().map(|&v| v as f64).collect();
            total += nll_loss(&self.mu, &self.sigma, &t)?.0;
        }
        Ok(total / idx.len() as f64)
    }
}

/// Central finite-difference gradient of the NLL of one sample.
pub fn numeric_gradient(reg: &Regressor, patch: &[f64], target: &[f64], eps: f64) -> Vec<f64> {
    let x = row_vector(patch);
    let y = row_vector(target);
    let mut probe = reg.clone();
    let mut out = vec![0.0; reg.params.len()];
    for (i, g) in out.iter_mut().enumerate() {
        let p0 = reg.params[i];
        probe.params[i] = p0 + eps;
        let hi = probe.loss_and_grad(x.clone(), &y).0;
        probe.params[i] = p0 - eps;
        let lo = probe.loss_and_grad(x.clone(), &y).0;
        probe.params[i] = p0;
        *g = (hi - lo) / (2.0 * eps);
    }
    out
}

/// Analytic parameter gradient of the NLL of one sample.
pub fn analytic_gradient(reg: &Regressor, patch: &[f64], target: &[f64]) -> Vec<f64> {
    reg.loss_and_grad(row_vector(patch), &row_vector(target)).1
}

/// Largest relative disagreement between `analytic` and central finite
/// differences, using `|a − n| / max(|a|, |n|, 1e-7)`.
pub fn grad_check_against(reg: &Regressor, patch: &[f64], target: &[f64], eps: f64, analytic: &[f64]) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(TntError::spec("finite-difference step must lie in [1e-7, 1e-3]"));
    }
    reg.check_width(patch.len())?;
    if target.len() != reg.k || analytic.len() != reg.params.len() {
        return Err(TntError::spec("gradient check inputs do not match the regressor"));
    }
    let numeric = numeric_gradient(reg, patch, target, eps);
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-7))
        .fold(0.0, f64::max))
}

pub fn grad_check(reg: &Regressor, patch: &[f64], target: &[f64], eps: f64) -> Result<f64> {
    let analytic = analytic_gradient(reg, patch, target);
    grad_check_against(reg, patch, target, eps, &analytic)
}
