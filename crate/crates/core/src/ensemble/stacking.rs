use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    layered_fit_xy, ridge_cv, ridge_fit_with, EnsembleError, LayeredConfig, LayeredEnsemble,
    RidgeConfig, RidgeParams,
};
use crate::cluster::{ClusterKind, ClusterModel};
use crate::ingest::kfold_indices;
use crate::seed::{self, Role};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaFeatureMode {
    /// Each row's meta-features come from base ensembles trained without
    /// its fold.
    #[default]
    OutOfFold,
    /// Base ensembles predict their own training rows.
    InSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackingConfig {
    pub layered: LayeredConfig,
    pub ridge: RidgeConfig,
    pub mode: MetaFeatureMode,
    pub folds: usize,
}

impl Default for StackingConfig {
    fn default() -> Self {
        Self {
            layered: LayeredConfig::default(),
            ridge: RidgeConfig::default(),
            mode: MetaFeatureMode::OutOfFold,
            folds: 10,
        }
    }
}

/// Four layered ensembles, one per clustering kind, fused by ridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub base: Vec<LayeredEnsemble>,
    pub meta: RidgeParams,
    pub mode: MetaFeatureMode,
}

impl StackingModel {
    pub fn base_outputs(&self, x: &[f64]) -> Vec<f64> {
        self.base.iter().map(|b| b.predict(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.meta.predict(&self.base_outputs(x))
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }
}

fn check_kinds(models: &[&ClusterModel]) -> Result<(), EnsembleError> {
    let mut kinds: Vec<ClusterKind> = models.iter().map(|m| m.kind).collect();
    kinds.sort_by_key(|k| k.name());
    kinds.dedup();
    if models.len() != 4 || kinds.len() != 4 {
        return Err(EnsembleError::BadConfig(
            "stacking needs exactly one cluster model of each kind".into(),
        ));
    }
    Ok(())
}

/// Fits base `t` with seed `derive(seed, Base, t)`, then the meta-learner.
pub fn stacking_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    cluster_models: &[ClusterModel],
    config: &StackingConfig,
    seed: u64,
) -> Result<StackingModel, EnsembleError> {
    check_kinds(&cluster_models.iter().collect::<Vec<_>>())?;
    let bases = cluster_models
        .par_iter()
        .enumerate()
        .map(|(t, cm)| layered_fit_xy(x, y, cm, &config.layered, seed::derive(seed, Role::Base, t as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    stacking_fit_with_bases(x, y, bases, config, seed)
}

/// Stacks already fitted full-data base ensembles.
pub fn stacking_fit_with_bases(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    bases: Vec<LayeredEnsemble>,
    config: &StackingConfig,
    seed: u64,
) -> Result<StackingModel, EnsembleError> {
    check_kinds(&bases.iter().map(|b| &b.cluster_model).collect::<Vec<_>>())?;
    let z = stacking_meta_features(x, y, &bases, config, seed)?;
    let meta = if config.ridge.lambda_grid.is_empty() {
        ridge_fit_with(z.view(), y, &config.ridge)?
    } else {
        ridge_cv(z.view(), y, &config.ridge, config.folds, seed::derive(seed, Role::Meta, 0))?
    };
    Ok(StackingModel {
        base: bases,
        meta,
        mode: config.mode,
    })
}

/// The `n × 4` meta-feature matrix.
///
/// Out-of-fold mode refits every base on each fold's complement, keeping
/// the base's cluster model; fold `f`, base `t` uses seed
/// `derive(derive(seed, Fold, f + 1), Base, t)`.
pub fn stacking_meta_features(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    bases: &[LayeredEnsemble],
    config: &StackingConfig,
    seed: u64,
) -> Result<Array2<f64>, EnsembleError> {
    let n = x.nrows();
    let m = bases.len();
    let mut z = Array2::zeros((n, m));
    match config.mode {
        MetaFeatureMode::InSample => {
            for (t, b) in bases.iter().enumerate() {
                for (i, r) in x.rows().into_iter().enumerate() {
                    z[[i, t]] = b.predict(&r.to_vec());
                }
            }
        }
        MetaFeatureMode::OutOfFold => {
            let folds = kfold_indices(n, config.folds, seed::derive(seed, Role::Fold, 0))
                .map_err(|e| EnsembleError::BadConfig(e.to_string()))?;
            let jobs: Vec<(usize, usize)> =
                (0..folds.len()).flat_map(|f| (0..m).map(move |t| (f, t))).collect();
            let outputs = jobs
                .par_iter()
                .map(|&(f, t)| {
                    let mut held = vec![false; n];
                    folds[f].iter().for_each(|&i| held[i] = true);
                    let train: Vec<usize> = (0..n).filter(|&i| !held[i]).collect();
                    let xt = x.select(Axis(0), &train);
                    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                    let s = seed::derive(seed::derive(seed, Role::Fold, f as u64 + 1), Role::Base, t as u64);
                    let fit = layered_fit_xy(xt.view(), &yt, &bases[t].cluster_model, &config.layered, s)?;
                    Ok(folds[f]
                        .iter()
                        .map(|&i| fit.predict(&x.row(i).to_vec()))
                        .collect::<Vec<f64>>())
                })
                .collect::<Result<Vec<_>, EnsembleError>>()?;
            for (&(f, t), out) in jobs.iter().zip(outputs) {
                for (&i, v) in folds[f].iter().zip(out) {
                    z[[i, t]] = v;
                }
            }
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{fit, FitSettings};
    use crate::ensemble::LearnerSpec;
    use ndarray::Array2;

    fn data(n: usize) -> (Array2<f64>, Vec<f64>) {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (((i + 3) * (j + 7) * 31) % 97) as f64 / 9.7);
        let y = x.rows().into_iter().map(|r| 2.0 * r[0] - r[1] + (r[0] * r[1]).sqrt()).collect();
        (x, y)
    }

    fn models(x: ArrayView2<'_, f64>) -> Vec<ClusterModel> {
        ClusterKind::ALL
            .iter()
            .map(|&k| fit(k, x, 2, 5, &FitSettings::default()).unwrap().model)
            .collect()
    }

    fn config(mode: MetaFeatureMode) -> StackingConfig {
        StackingConfig {
            layered: LayeredConfig { learner: LearnerSpec::Linear, min_cluster_train: 5 },
            mode,
            ..StackingConfig::default()
        }
    }

    #[test]
    fn prediction_is_the_ridge_map_of_base_outputs() {
        let (x, y) = data(120);
        let m = stacking_fit(x.view(), &y, &models(x.view()), &config(MetaFeatureMode::OutOfFold), 3).unwrap();
        for r in x.rows() {
            let v = r.to_vec();
            let mut expect = m.meta.intercept;
            for (b, w) in m.base.iter().zip(&m.meta.weights) {
                expect += w * b.predict(&v);
            }
            assert!((m.predict(&v) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn in_sample_features_are_base_predictions() {
        let (x, y) = data(60);
        let cms = models(x.view());
        let cfg = config(MetaFeatureMode::InSample);
        let bases: Vec<_> = cms
            .iter()
            .enumerate()
            .map(|(t, cm)| layered_fit_xy(x.view(), &y, cm, &cfg.layered, seed::derive(9, Role::Base, t as u64)).unwrap())
            .collect();
        let z = stacking_meta_features(x.view(), &y, &bases, &cfg, 9).unwrap();
        for i in 0..60 {
            for t in 0..4 {
                assert_eq!(z[[i, t]], bases[t].predict(&x.row(i).to_vec()));
            }
        }
    }

    #[test]
    fn out_of_fold_differs_from_in_sample() {
        let (x, y) = data(100);
        let cms = models(x.view());
        let a = stacking_fit(x.view(), &y, &cms, &config(MetaFeatureMode::OutOfFold), 1).unwrap();
        let b = stacking_fit(x.view(), &y, &cms, &config(MetaFeatureMode::InSample), 1).unwrap();
        assert_eq!(a.base, b.base);
        assert_ne!(a.meta, b.meta);
    }

    #[test]
    fn needs_one_model_per_kind() {
        let (x, y) = data(40);
        let mut cms = models(x.view());
        cms[1] = cms[0].clone();
        assert!(matches!(
            stacking_fit(x.view(), &y, &cms, &StackingConfig::default(), 0),
            Err(EnsembleError::BadConfig(_))
        ));
    }
}
