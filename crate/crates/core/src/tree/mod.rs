//! Regression trees with reduced-error pruning and random forests of them.
//!
//! Training data is wrapped once in a [`TrainingSet`] holding per-feature
//! sort orders. Trees are then grown from integer row multiplicities, which
//! is how bootstrap and boosting resamples are passed around without
//! copying rows.

mod forest;
mod reptree;

use ndarray::ArrayView2;
use thiserror::Error;

pub use forest::{bootstrap_counts, rf_fit, rf_fit_counts, Forest, ForestParams};
pub use reptree::{grow_tree, prune, reptree_fit, reptree_fit_counts, Node, RepTree, RepTreeParams};

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("non-finite value in training data")]
    NonFiniteInput,
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

/// Feature matrix and targets with per-feature ascending row orders.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub(crate) x: Vec<f64>,
    pub(crate) y: Vec<f64>,
    pub(crate) n: usize,
    pub(crate) d: usize,
    pub(crate) order: Vec<Vec<u32>>,
}

impl TrainingSet {
    pub fn new(x: ArrayView2<'_, f64>, y: &[f64]) -> Result<Self, TreeError> {
        let (n, d) = x.dim();
        if y.len() != n {
            return Err(TreeError::LengthMismatch {
                rows: n,
                targets: y.len(),
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(TreeError::NonFiniteInput);
        }
        let flat: Vec<f64> = x.as_standard_layout().iter().copied().collect();
        let order = (0..d)
            .map(|f| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| {
                    flat[a as usize * d + f]
                        .total_cmp(&flat[b as usize * d + f])
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Ok(Self {
            x: flat,
            y: y.to_vec(),
            n,
            d,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub(crate) fn value(&self, i: usize, f: usize) -> f64 {
        self.x[i * self.d + f]
    }
}
