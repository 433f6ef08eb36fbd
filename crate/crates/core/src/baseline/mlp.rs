use std::ops::RangeInclusive;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, BaselineError};
use crate::ingest::kfold_indices;
use crate::seed::{self, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            epochs: 200,
            lr: 0.01,
            batch: 32,
        }
    }
}

/// Network parameters. `w1` is `d × h` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub d: usize,
    pub h: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Gradients share the parameter layout.
pub type MlpGradient = MlpWeights;

impl MlpWeights {
    pub fn zeros(d: usize, h: usize) -> Self {
        Self {
            d,
            h,
            w1: vec![0.0; d * h],
            b1: vec![0.0; h],
            w2: vec![0.0; h],
            b2: 0.0,
        }
    }

    pub fn init(d: usize, h: usize, rng: &mut seed::Rng) -> Self {
        let mut w = Self::zeros(d, h);
        let a1 = 1.0 / (d as f64).sqrt();
        let a2 = 1.0 / (h as f64).sqrt();
        w.w1.iter_mut().for_each(|v| *v = rng.random_range(-a1..a1));
        w.w2.iter_mut().for_each(|v| *v = rng.random_range(-a2..a2));
        w
    }

    /// All parameters in the order `w1, b1, w2, b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w1.len() + 2 * self.h + 1);
        out.extend(&self.w1);
        out.extend(&self.b1);
        out.extend(&self.w2);
        out.push(self.b2);
        out
    }

    pub fn from_flat(d: usize, h: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), d * h + 2 * h + 1);
        let (w1, rest) = flat.split_at(d * h);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        Self {
            d,
            h,
            w1: w1.to_vec(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: rest[0],
        }
    }

    fn hidden_into(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.h {
            let mut a = self.b1[k];
            for j in 0..self.d {
                a += x[j] * self.w1[j * self.h + k];
            }
            out[k] = a.tanh();
        }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut hid = vec![0.0; self.h];
        self.hidden_into(x, &mut hid);
        self.b2 + hid.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>()
    }

    fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite()) && self.b2.is_finite()
    }
}

/// Mean of `½(ŷ − y)²` over the batch and its gradient.
pub fn loss_and_gradient(w: &MlpWeights, x: ArrayView2<'_, f64>, y: &[f64]) -> (f64, MlpGradient) {
    let m = y.len() as f64;
    let mut g = MlpWeights::zeros(w.d, w.h);
    let mut hid = vec![0.0; w.h];
    let mut loss = 0.0;
    for (row, &target) in x.rows().into_iter().zip(y) {
        let xr = row.to_vec();
        w.hidden_into(&xr, &mut hid);
        let out = w.b2 + hid.iter().zip(&w.w2).map(|(a, b)| a * b).sum::<f64>();
        let r = out - target;
        loss += 0.5 * r * r / m;
        let e = r / m;
        g.b2 += e;
        for k in 0..w.h {
            g.w2[k] += e * hid[k];
            let delta = e * w.w2[k] * (1.0 - hid[k] * hid[k]);
            g.b1[k] += delta;
            for j in 0..w.d {
                g.w1[j * w.h + k] += delta * xr[j];
            }
        }
    }
    (loss, g)
}

/// tanh hidden layer, identity output. Inputs and targets are standardized
/// internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub weights: MlpWeights,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
    pub config: MlpConfig,
    pub seed: u64,
}

impl MlpModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        self.target_mean + self.target_std * self.weights.forward(&z)
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }
}

fn mean_std(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let var = v.map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

/// Mini-batch SGD on squared error.
pub fn mlp_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    cfg: &MlpConfig,
    seed: u64,
) -> Result<MlpModel, BaselineError> {
    check_xy(x, y)?;
    let (n, d) = x.dim();
    if n < 10 {
        return Err(BaselineError::TooFewRows { needed: 10, got: n });
    }
    if cfg.hidden == 0 || cfg.batch == 0 || !(cfg.lr > 0.0) {
        return Err(BaselineError::BadParams(format!("{cfg:?}")));
    }
    let (input_mean, input_std): (Vec<f64>, Vec<f64>) =
        (0..d).map(|j| mean_std(x.column(j).into_iter().copied())).unzip();
    let (target_mean, target_std) = mean_std(y.iter().copied());
    let mut xs = x.to_owned();
    for j in 0..d {
        xs.column_mut(j).mapv_inplace(|v| (v - input_mean[j]) / input_std[j]);
    }
    let ys: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_std).collect();

    let mut rng = seed::rng(seed);
    let mut w = MlpWeights::init(d, cfg.hidden, &mut rng);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch) {
            let xb = xs.select(Axis(0), chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
            let (_, g) = loss_and_gradient(&w, xb.view(), &yb);
            let step = |p: &mut [f64], q: &[f64]| p.iter_mut().zip(q).for_each(|(a, b)| *a -= cfg.lr * b);
            step(&mut w.w1, &g.w1);
            step(&mut w.b1, &g.b1);
            step(&mut w.w2, &g.w2);
            w.b2 -= cfg.lr * g.b2;
        }
        if !w.is_finite() {
            return Err(BaselineError::Diverged);
        }
    }
    Ok(MlpModel {
        weights: w,
        input_mean,
        input_std,
        target_mean,
        target_std,
        config: *cfg,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSweep {
    pub best_hidden: usize,
    /// `(hidden, validation MSE)` per candidate.
    pub scores: Vec<(usize, f64)>,
    pub model: MlpModel,
}

/// Grid search over hidden sizes on a one-in-ten validation fold, then a
/// refit on all rows.
pub fn mlp_sweep(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    cfg: &MlpConfig,
    hidden: RangeInclusive<usize>,
    seed: u64,
) -> Result<MlpSweep, BaselineError> {
    check_xy(x, y)?;
    let n = x.nrows();
    if hidden.is_empty() || *hidden.start() == 0 {
        return Err(BaselineError::BadParams(format!("hidden range {hidden:?}")));
    }
    let folds = kfold_indices(n, 10, seed::derive(seed, Role::Fold, 0))
        .map_err(|_| BaselineError::TooFewRows { needed: 10, got: n })?;
    let mut held = vec![false; n];
    folds[0].iter().for_each(|&i| held[i] = true);
    let train: Vec<usize> = (0..n).filter(|&i| !held[i]).collect();
    let xt = x.select(Axis(0), &train);
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let mut scores = Vec::new();
    for h in hidden {
        let c = MlpConfig { hidden: h, ..*cfg };
        let m = mlp_fit(xt.view(), &yt, &c, seed::derive(seed, Role::Init, h as u64))?;
        let mse = folds[0]
            .iter()
            .map(|&i| (m.predict(&x.row(i).to_vec()) - y[i]).powi(2))
            .sum::<f64>()
            / folds[0].len() as f64;
        scores.push((h, mse));
    }
    let best_hidden = scores
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|s| s.0)
        .expect("non-empty range");
    let model = mlp_fit(x, y, &MlpConfig { hidden: best_hidden, ..*cfg }, seed)?;
    Ok(MlpSweep {
        best_hidden,
        scores,
        model,
    })
}
