use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{adaboost_fit, ridge_fit_with, AdaBoostConfig, AdaBoostModel, EnsembleError, RidgeConfig, RidgeParams};
use crate::baseline::{mlp_fit, MlpConfig, MlpModel};

/// What to train inside each cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "kebab-case")]
pub enum LearnerSpec {
    Boost(AdaBoostConfig),
    /// Ordinary least squares; a tiny ridge penalty is used only when the
    /// design is rank-deficient.
    Linear,
    Mlp(MlpConfig),
}

impl LearnerSpec {
    pub fn adarf() -> Self {
        LearnerSpec::Boost(AdaBoostConfig::adarf())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "kebab-case")]
pub enum Learner {
    Boost(AdaBoostModel),
    Linear(RidgeParams),
    Mlp(MlpModel),
}

impl Learner {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Learner::Boost(m) => m.predict(x),
            Learner::Linear(m) => m.predict(x),
            Learner::Mlp(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }
}

pub fn fit_learner(
    spec: &LearnerSpec,
    x: ArrayView2<'_, f64>,
    y: &[f64],
    seed: u64,
) -> Result<Learner, EnsembleError> {
    Ok(match spec {
        LearnerSpec::Boost(cfg) => Learner::Boost(adaboost_fit(x, y, cfg, seed)?),
        LearnerSpec::Linear => {
            let exact = RidgeConfig {
                lambda: 0.0,
                standardize: false,
                ..RidgeConfig::default()
            };
            match ridge_fit_with(x, y, &exact) {
                Err(EnsembleError::SingularSystem) => Learner::Linear(ridge_fit_with(
                    x,
                    y,
                    &RidgeConfig {
                        lambda: 1e-6,
                        ..RidgeConfig::default()
                    },
                )?),
                other => Learner::Linear(other?),
            }
        }
        LearnerSpec::Mlp(cfg) => Learner::Mlp(mlp_fit(x, y, cfg, seed)?),
    })
}
