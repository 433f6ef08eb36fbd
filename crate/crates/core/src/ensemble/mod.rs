//! Boosting, the cluster-routed layered ensemble, ridge regression and
//! stacking of layered ensembles.

mod adaboost;
mod layered;
mod learner;
mod ridge;
mod stacking;

use thiserror::Error;

pub use adaboost::{
    adaboost_fit, adaboost_fit_data, adaboost_fit_traced, AdaBoostConfig, AdaBoostModel,
    BoostTrace, Combine, WeakLearnerSpec, WeakModel,
};
pub use layered::{layered_fit, layered_fit_xy, no_clustering_fit, LayeredConfig, LayeredEnsemble};
pub use learner::{fit_learner, Learner, LearnerSpec};
pub use ridge::{ridge_cv, ridge_fit, ridge_fit_with, Penalty, RidgeConfig, RidgeParams};
pub use stacking::{
    stacking_fit, stacking_fit_with_bases, stacking_meta_features, MetaFeatureMode,
    StackingConfig, StackingModel,
};

use crate::baseline::BaselineError;
use crate::cluster::ClusterError;
use crate::tree::TreeError;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("feature space mismatch: model expects {expected} features, data has {got}")]
    IncompatibleFeatureSpace { expected: usize, got: usize },
    #[error("singular system: lambda = 0 with a rank-deficient design")]
    SingularSystem,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}
