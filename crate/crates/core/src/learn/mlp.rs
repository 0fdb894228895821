//! Fully connected network over a flat parameter vector.
//!
//! Layer `l` stores its weight matrix `(out, in)` row-major followed by its
//! bias. Hidden layers use the configured activation; the output layer is
//! linear.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Result, TntError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Self::Tanh => 0,
            Self::Relu => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Self::Tanh),
            1 => Some(Self::Relu),
            _ => None,
        }
    }

    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Self::Tanh => z.mapv_inplace(f64::tanh),
            Self::Relu => z.mapv_inplace(|v| v.max(0.0)),
        }
    }

    /// Derivative expressed through the activation output.
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
            Self::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = TntError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            other => Err(TntError::spec(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arch {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub activation: Activation,
}

impl Arch {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        Self {
            input,
            hidden: hidden.to_vec(),
            output,
            activation: Activation::Tanh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.output == 0 || self.hidden.iter().any(|&h| h == 0) {
            return Err(TntError::spec("network layers must have non-zero width"));
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.hidden.len() + 2);
        v.push(self.input);
        v.extend_from_slice(&self.hidden);
        v.push(self.output);
        v
    }

    /// `(weight offset, bias offset, in, out)` per layer.
    pub fn layers(&self) -> Vec<(usize, usize, usize, usize)> {
        let sizes = self.sizes();
        let mut off = 0;
        sizes
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let entry = (off, off + i * o, i, o);
                off += i * o + o;
                entry
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|&(_, _, i, o)| i * o + o).sum()
    }

    /// Uniform fan-in initialization, biases zero.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        for (w, _, i, o) in self.layers() {
            let bound = 1.0 / (i as f64).sqrt();
            for v in &mut p[w..w + i * o] {
                *v = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    fn weight<'a>(&self, params: &'a [f64], layer: (usize, usize, usize, usize)) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
        let (w, b, i, o) = layer;
        let wm = ArrayView2::from_shape((o, i), &params[w..w + i * o]).expect("layer shape");
        let bv = ArrayView1::from(&params[b..b + o]);
        (wm, bv)
    }

    /// Batch forward pass keeping every layer's output for backpropagation.
    pub fn forward(&self, params: &[f64], x: Array2<f64>) -> Tape {
        debug_assert_eq!(params.len(), self.param_count());
        debug_assert_eq!(x.ncols(), self.input);
        let layers = self.layers();
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(x);
        for (l, &layer) in layers.iter().enumerate() {
            let (w, b) = self.weight(params, layer);
            let mut z = acts[l].dot(&w.t());
            z += &b;
            if l + 1 < layers.len() {
                self.activation.apply(&mut z);
            }
            acts.push(z);
        }
        Tape { acts }
    }

    /// Parameter gradient summed over the batch, given `d_out = dL/d(output)`.
    pub fn backward(&self, params: &[f64], tape: &Tape, d_out: Array2<f64>) -> Vec<f64> {
        let layers = self.layers();
        let mut grad = vec![0.0; params.len()];
        let mut delta = d_out;
        for l in (0..layers.len()).rev() {
            let layer = layers[l];
            let (wo, bo, i, o) = layer;
            let input = &tape.acts[l];
            let gw = delta.t().dot(input);
            grad[wo..wo + i * o].iter_mut().zip(gw.iter()).for_each(|(g, v)| *g = *v);
            let gb = delta.sum_axis(Axis(0));
            grad[bo..bo + o].iter_mut().zip(gb.iter()).for_each(|(g, v)| *g = *v);
            if l > 0 {
                let (w, _) = self.weight(params, layer);
                let mut d = delta.dot(&w);
                let act = self.activation;
                d.zip_mut_with(input, |g, &a| *g *= act.grad_from_output(a));
                delta = d;
            }
        }
        grad
    }
}

pub struct Tape {
    acts: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("tape has an output")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = TntError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(TntError::spec(format!("unknown optimizer '{other}'"))),
        }
    }
}

pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam => (vec![0.0; n], vec![0.0; n]),
        };
        Self { kind, lr, m, v, t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                    *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                    *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
                }
            }
        }
    }
}

/// Rows `idx` of a flat row-major f32 table, widened to f64.
pub(crate) fn gather_rows(data: &[f32], width: usize, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), width));
    for (r, &i) in idx.iter().enumerate() {
        let src = &data[i * width..(i + 1) * width];
        out.slice_mut(s![r, ..])
            .iter_mut()
            .zip(src)
            .for_each(|(d, &v)| *d = v as f64);
    }
    out
}

pub(crate) fn row_vector(x: &[f64]) -> Array2<f64> {
    Array1::from(x.to_vec()).insert_axis(Axis(0))
}
