use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_learner, EnsembleError, Learner, LearnerSpec};
use crate::cluster::ClusterModel;
use crate::ingest::Dataset;
use crate::seed::{self, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayeredConfig {
    pub learner: LearnerSpec,
    /// Clusters with fewer training rows defer to the global fallback.
    pub min_cluster_train: usize,
}

impl Default for LayeredConfig {
    fn default() -> Self {
        Self {
            learner: LearnerSpec::adarf(),
            min_cluster_train: 30,
        }
    }
}

/// Cluster-routed ensemble: one submodel per cluster, `None` marking
/// clusters that use the fallback model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredEnsemble {
    pub cluster_model: ClusterModel,
    pub submodels: Vec<Option<Learner>>,
    /// Trained on all rows; present whenever some cluster is marked.
    pub fallback: Option<Learner>,
    pub min_cluster_train: usize,
    pub seed: u64,
}

impl LayeredEnsemble {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let c = self.cluster_model.assign_unchecked(x);
        match &self.submodels[c] {
            Some(m) => m.predict(x),
            None => self
                .fallback
                .as_ref()
                .expect("fallback exists when a cluster is marked")
                .predict(x),
        }
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }

    pub fn n_fallback_clusters(&self) -> usize {
        self.submodels.iter().filter(|s| s.is_none()).count()
    }
}

pub fn layered_fit(
    train: &Dataset,
    cluster_model: &ClusterModel,
    config: &LayeredConfig,
    seed: u64,
) -> Result<LayeredEnsemble, EnsembleError> {
    layered_fit_xy(train.features.view(), &train.targets, cluster_model, config, seed)
}

/// Routes rows to clusters and trains cluster `c` with seed
/// `derive(seed, Submodel, c)`. With a single cluster the result equals
/// [`no_clustering_fit`] at the same seed.
pub fn layered_fit_xy(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    cluster_model: &ClusterModel,
    config: &LayeredConfig,
    seed: u64,
) -> Result<LayeredEnsemble, EnsembleError> {
    if x.ncols() != cluster_model.n_features() {
        return Err(EnsembleError::IncompatibleFeatureSpace {
            expected: cluster_model.n_features(),
            got: x.ncols(),
        });
    }
    if y.len() != x.nrows() {
        return Err(EnsembleError::LengthMismatch {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    let labels = cluster_model.assign_all(x)?;
    let mut members = vec![Vec::new(); cluster_model.k];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    let submodels = members
        .par_iter()
        .enumerate()
        .map(|(c, rows)| {
            if rows.len() < config.min_cluster_train.max(2) {
                return Ok(None);
            }
            let xs = x.select(Axis(0), rows);
            let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            fit_learner(&config.learner, xs.view(), &ys, seed::derive(seed, Role::Submodel, c as u64))
                .map(Some)
        })
        .collect::<Result<Vec<_>, EnsembleError>>()?;
    let fallback = if submodels.iter().any(Option::is_none) {
        Some(fit_learner(&config.learner, x, y, seed::derive(seed, Role::Fallback, 0))?)
    } else {
        None
    };
    Ok(LayeredEnsemble {
        cluster_model: cluster_model.clone(),
        submodels,
        fallback,
        min_cluster_train: config.min_cluster_train,
        seed,
    })
}

/// The global model a layered ensemble is compared against.
pub fn no_clustering_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    spec: &LearnerSpec,
    seed: u64,
) -> Result<Learner, EnsembleError> {
    fit_learner(spec, x, y, seed::derive(seed, Role::Submodel, 0))
}
