use ndarray::ArrayView2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EnsembleError;
use crate::seed::{self, Role};
use crate::tree::{
    reptree_fit_counts, rf_fit_counts, Forest, ForestParams, RepTree, RepTreeParams, TrainingSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeakLearnerSpec {
    Forest(ForestParams),
    Tree(RepTreeParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeakModel {
    Forest(Forest),
    Tree(RepTree),
}

impl WeakModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            WeakModel::Forest(f) => f.predict(x),
            WeakModel::Tree(t) => t.predict(x),
        }
    }
}

impl WeakLearnerSpec {
    fn fit(&self, data: &TrainingSet, counts: &[u32], seed: u64) -> Result<WeakModel, EnsembleError> {
        Ok(match self {
            WeakLearnerSpec::Forest(p) => WeakModel::Forest(rf_fit_counts(data, counts, p, seed)?),
            WeakLearnerSpec::Tree(p) => {
                let mut rng = seed::rng(seed);
                WeakModel::Tree(reptree_fit_counts(data, counts, p, data.n_features(), &mut rng)?)
            }
        })
    }
}

/// How learner outputs are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    /// `Σ w_i h_i(x)` with weights summing to one.
    #[default]
    WeightedMean,
    /// Weighted median of the learner outputs.
    WeightedMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub n_iter: usize,
    pub weak: WeakLearnerSpec,
    #[serde(default)]
    pub combine: Combine,
}

impl AdaBoostConfig {
    /// 100 rounds of 10-tree forests.
    pub fn adarf() -> Self {
        Self {
            n_iter: 100,
            weak: WeakLearnerSpec::Forest(ForestParams::default()),
            combine: Combine::WeightedMean,
        }
    }

    /// 20 rounds of unpruned depth-8 trees.
    pub fn adadt() -> Self {
        Self {
            n_iter: 20,
            weak: WeakLearnerSpec::Tree(RepTreeParams {
                max_depth: 8,
                prune: false,
                ..RepTreeParams::default()
            }),
            combine: Combine::WeightedMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub learners: Vec<WeakModel>,
    /// Non-negative, summing to one.
    pub weights: Vec<f64>,
    pub n_iter_effective: usize,
    /// The first round already had average loss ≥ 0.5; its learner is kept
    /// alone with weight one.
    pub no_useful_learner: bool,
    pub combine: Combine,
}

impl AdaBoostModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.combine {
            Combine::WeightedMean => self
                .learners
                .iter()
                .zip(&self.weights)
                .map(|(l, w)| w * l.predict(x))
                .sum(),
            Combine::WeightedMedian => {
                let mut out: Vec<(f64, f64)> = self
                    .learners
                    .iter()
                    .zip(&self.weights)
                    .map(|(l, &w)| (l.predict(x), w))
                    .collect();
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                for (v, w) in &out {
                    acc += w;
                    if acc >= 0.5 - 1e-12 {
                        return *v;
                    }
                }
                out.last().map_or(0.0, |p| p.0)
            }
        }
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }
}

/// Per-round diagnostics of a boosting run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoostTrace {
    /// Weighted average loss of every fitted round, kept or not.
    pub average_loss: Vec<f64>,
    /// Sum of the sample-weight vector after each update.
    pub weight_sums: Vec<f64>,
    /// Smallest sample weight after each update.
    pub weight_mins: Vec<f64>,
}

pub fn adaboost_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    config: &AdaBoostConfig,
    seed: u64,
) -> Result<AdaBoostModel, EnsembleError> {
    if y.len() != x.nrows() {
        return Err(EnsembleError::LengthMismatch {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    let data = TrainingSet::new(x, y)?;
    adaboost_fit_data(&data, config, seed)
}

pub fn adaboost_fit_data(
    data: &TrainingSet,
    config: &AdaBoostConfig,
    seed: u64,
) -> Result<AdaBoostModel, EnsembleError> {
    Ok(adaboost_fit_traced(data, config, seed)?.0)
}

/// Draws `n` rows with probabilities `dist` (inverse-CDF sampling).
fn weighted_counts<R: Rng>(dist: &[f64], rng: &mut R) -> Vec<u32> {
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for &p in dist {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = vec![0u32; dist.len()];
    for _ in 0..dist.len() {
        let u = rng.random::<f64>() * acc;
        let i = cdf.partition_point(|&c| c <= u).min(dist.len() - 1);
        counts[i] += 1;
    }
    counts
}

/// AdaBoost.R2 with linear loss.
///
/// Each round fits the weak learner on a bootstrap drawn from the current
/// sample distribution, scores relative absolute errors on all rows, and
/// stops once the weighted average loss reaches 0.5. Learner weights are
/// `ln(1/β)` normalized to sum to one. A learner with zero training error
/// ends boosting and is kept alone.
pub fn adaboost_fit_traced(
    data: &TrainingSet,
    config: &AdaBoostConfig,
    seed: u64,
) -> Result<(AdaBoostModel, BoostTrace), EnsembleError> {
    let n = data.len();
    if n < 2 {
        return Err(EnsembleError::TooFewRows { needed: 2, got: n });
    }
    if config.n_iter == 0 {
        return Err(EnsembleError::BadConfig("n_iter must be at least 1".into()));
    }
    let y = data.targets();
    let mut dist = vec![1.0 / n as f64; n];
    let mut learners = Vec::new();
    let mut raw = Vec::new();
    let mut trace = BoostTrace::default();
    let mut no_useful = false;
    let mut err = vec![0.0; n];
    for round in 0..config.n_iter {
        let round_seed = seed::derive(seed, Role::BoostRound, round as u64);
        let counts = weighted_counts(&dist, &mut seed::rng(round_seed));
        let model = config
            .weak
            .fit(data, &counts, seed::derive(round_seed, Role::Base, 0))?;
        let mut max_err: f64 = 0.0;
        for i in 0..n {
            err[i] = (model.predict(data.row(i)) - y[i]).abs();
            max_err = max_err.max(err[i]);
        }
        if max_err == 0.0 {
            trace.average_loss.push(0.0);
            learners = vec![model];
            raw = vec![1.0];
            break;
        }
        let avg: f64 = dist.iter().zip(&err).map(|(d, e)| d * e / max_err).sum();
        trace.average_loss.push(avg);
        if avg >= 0.5 {
            if learners.is_empty() {
                learners.push(model);
                raw.push(1.0);
                no_useful = true;
            }
            break;
        }
        let beta = (avg / (1.0 - avg)).max(1e-300);
        for (d, e) in dist.iter_mut().zip(&err) {
            *d *= beta.powf(1.0 - e / max_err);
        }
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|d| *d /= total);
        trace.weight_sums.push(dist.iter().sum());
        trace.weight_mins.push(dist.iter().copied().fold(f64::INFINITY, f64::min));
        learners.push(model);
        raw.push((1.0 / beta).ln());
    }
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = if total > 0.0 {
        raw.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    };
    Ok((
        AdaBoostModel {
            n_iter_effective: learners.len(),
            learners,
            weights,
            no_useful_learner: no_useful,
            combine: config.combine,
        },
        trace,
    ))
}
