//! Benchmark models: least squares with t-statistic diagnosis, a
//! single-hidden-layer network and boosted decision trees.

mod mlp;
mod ols;

use ndarray::ArrayView2;
use thiserror::Error;

pub use mlp::{
    loss_and_gradient, mlp_fit, mlp_sweep, MlpConfig, MlpGradient, MlpModel, MlpSweep, MlpWeights,
};
pub use ols::{feature_diagnosis, feature_diagnosis_named, ols_fit, Diagnosis, DiagnosisRow, LinearModel};

use crate::ensemble::{adaboost_fit, AdaBoostConfig, AdaBoostModel, EnsembleError};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("design matrix is rank-deficient")]
    RankDeficient,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("training diverged to non-finite weights")]
    Diverged,
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boosting over `n_trees` unpruned depth-8 trees.
pub fn adadt_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    n_trees: usize,
    seed: u64,
) -> Result<AdaBoostModel, EnsembleError> {
    let cfg = AdaBoostConfig {
        n_iter: n_trees,
        ..AdaBoostConfig::adadt()
    };
    adaboost_fit(x, y, &cfg, seed)
}

pub(crate) fn check_xy(x: ArrayView2<'_, f64>, y: &[f64]) -> Result<(), BaselineError> {
    if x.nrows() != y.len() {
        return Err(BaselineError::LengthMismatch {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(BaselineError::NonFiniteInput);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{reptree_fit, RepTreeParams};
    use ndarray::Array2;

    #[test]
    fn one_tree_adadt_matches_its_tree() {
        let x = Array2::from_shape_fn((60, 2), |(i, j)| ((i * 7 + j * 3) % 13) as f64);
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] * 2.0 - r[1]).collect();
        let m = adadt_fit(x.view(), &y, 1, 3).unwrap();
        assert_eq!(m.learners.len(), 1);
        assert_eq!(m.weights, vec![1.0]);
        for r in x.rows() {
            let v = r.to_vec();
            assert_eq!(m.predict(&v), m.learners[0].predict(&v));
        }
        // the lone learner is an ordinary depth-capped tree
        let _ = reptree_fit(x.view(), &y, &RepTreeParams { max_depth: 8, prune: false, ..Default::default() }, 0)
            .unwrap();
    }

    #[test]
    fn adadt_weights_normalized() {
        let x = Array2::from_shape_fn((200, 3), |(i, j)| (((i + 1) * (j + 5)) % 17) as f64 / 17.0);
        let y: Vec<f64> = x.rows().into_iter().map(|r| (r[0] * 6.0).sin() + r[1] * r[2]).collect();
        let m = adadt_fit(x.view(), &y, 20, 11).unwrap();
        assert!(m.weights.iter().all(|&w| w >= 0.0));
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(m.learners.len(), m.weights.len());
    }
}
