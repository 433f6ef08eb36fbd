use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use windstack::baseline::{mlp_fit, mlp_sweep, ols_fit};
use windstack::cluster::{fit as fit_clustering, xmeans, ClusterKind, ClusterModel};
use windstack::document::ModelBody;
use windstack::ensemble::{
    adaboost_fit, layered_fit_xy, no_clustering_fit, stacking_fit_with_bases, LayeredConfig,
    LayeredEnsemble, LearnerSpec, RidgeConfig, StackingConfig,
};
use windstack::ingest::{
    apply_standardization, engineer_features, fit_standardization, parse_csv, split_train_test,
    Dataset, StandardizationParams,
};
use windstack::seed::{self, Role};
use windstack::stats::{metric_report, MetricReport};

use crate::config::ModelSettings;
use crate::error::{CliError, CliResult};

/// Per-cluster learner family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseLearner {
    Lr,
    Ann,
    Adadt,
    Adarf,
}

impl BaseLearner {
    pub fn name(self) -> &'static str {
        match self {
            BaseLearner::Lr => "lr",
            BaseLearner::Ann => "ann",
            BaseLearner::Adadt => "adadt",
            BaseLearner::Adarf => "adarf",
        }
    }

    pub fn spec(self, settings: &ModelSettings) -> LearnerSpec {
        match self {
            BaseLearner::Lr => LearnerSpec::Linear,
            BaseLearner::Ann => LearnerSpec::Mlp(settings.mlp),
            BaseLearner::Adadt => LearnerSpec::Boost(settings.adadt),
            BaseLearner::Adarf => LearnerSpec::Boost(settings.adarf),
        }
    }
}

impl FromStr for BaseLearner {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "lr" => BaseLearner::Lr,
            "ann" => BaseLearner::Ann,
            "adadt" => BaseLearner::Adadt,
            "adarf" => BaseLearner::Adarf,
            _ => return Err(CliError::Config(format!("unknown learner `{s}`"))),
        })
    }
}

/// A trainable model: `lr`, `ann`, `adadt`, `adarf`, `layered:<kind>` or
/// `stacking[:<learner>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    Single(BaseLearner),
    Layered(ClusterKind),
    Stacking(BaseLearner),
}

impl FromStr for ModelSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if let Some(kind) = s.strip_prefix("layered:") {
            let kind = kind
                .parse::<ClusterKind>()
                .map_err(|_| CliError::Config(format!("unknown clustering `{kind}`")))?;
            return Ok(ModelSpec::Layered(kind));
        }
        if s == "stacking" {
            return Ok(ModelSpec::Stacking(BaseLearner::Adarf));
        }
        if let Some(base) = s.strip_prefix("stacking:") {
            return Ok(ModelSpec::Stacking(base.parse()?));
        }
        s.parse()
            .map(ModelSpec::Single)
            .map_err(|_| CliError::Config(format!("unknown model spec `{s}`")))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Single(b) => f.write_str(b.name()),
            ModelSpec::Layered(k) => write!(f, "layered:{}", k.name()),
            ModelSpec::Stacking(b) => write!(f, "stacking:{}", b.name()),
        }
    }
}

pub fn load_dataset(path: &Path) -> CliResult<(Dataset, Vec<String>)> {
    let parsed = parse_csv(path)?;
    let warnings = parsed.warnings.iter().map(|w| format!("{w:?}")).collect();
    Ok((engineer_features(&parsed.records)?, warnings))
}

/// Standardized train/test partition of one dataset.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub standardization: StandardizationParams,
}

pub fn split_seed(seed: u64) -> u64 {
    seed::derive(seed, Role::Fold, u64::MAX)
}

pub fn prepare(ds: &Dataset, settings: &ModelSettings, seed: u64) -> CliResult<Prepared> {
    let (train, test) = split_train_test(ds, settings.train_frac, settings.split, split_seed(seed))?;
    let standardization = fit_standardization(&train)?;
    Ok(Prepared {
        train: apply_standardization(&standardization, &train)?,
        test: apply_standardization(&standardization, &test)?,
        standardization,
    })
}

pub fn evaluate(body: &ModelBody, test: &Dataset) -> CliResult<MetricReport> {
    let pred: Vec<f64> = test
        .features
        .rows()
        .into_iter()
        .map(|r| body.predict(&r.to_vec()))
        .collect();
    Ok(metric_report(&pred, &test.targets)?)
}

/// Fits models on one training set, sharing cluster models and layered
/// ensembles between specs.
pub struct Fitter<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    settings: &'a ModelSettings,
    seed: u64,
    k: Option<usize>,
    clusters: BTreeMap<ClusterKind, ClusterModel>,
    layered: BTreeMap<(ClusterKind, BaseLearner), LayeredEnsemble>,
}

impl<'a> Fitter<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &'a [f64], settings: &'a ModelSettings, seed: u64) -> Self {
        Self {
            x,
            y,
            settings,
            seed,
            k: settings.k,
            clusters: BTreeMap::new(),
            layered: BTreeMap::new(),
        }
    }

    /// The cluster count, selecting it by X-means on first use when unset.
    pub fn k(&mut self) -> CliResult<usize> {
        if let Some(k) = self.k {
            return Ok(k);
        }
        let k_max = self.settings.k_max.min(self.x.nrows());
        let r = xmeans(self.x, self.settings.k_min, k_max, seed::derive(self.seed, Role::Cluster, 100))?;
        self.k = Some(r.best_k);
        Ok(r.best_k)
    }

    pub fn cluster_model(&mut self, kind: ClusterKind) -> CliResult<ClusterModel> {
        if let Some(m) = self.clusters.get(&kind) {
            return Ok(m.clone());
        }
        let k = self.k()?;
        let idx = ClusterKind::ALL.iter().position(|&c| c == kind).expect("listed") as u64;
        let m = fit_clustering(kind, self.x, k, seed::derive(self.seed, Role::Cluster, idx), &self.settings.clustering)?
            .model;
        self.clusters.insert(kind, m.clone());
        Ok(m)
    }

    fn layered_config(&self, base: BaseLearner) -> LayeredConfig {
        LayeredConfig {
            learner: base.spec(self.settings),
            min_cluster_train: self.settings.min_cluster_train,
        }
    }

    pub fn layered(&mut self, kind: ClusterKind, base: BaseLearner) -> CliResult<LayeredEnsemble> {
        if let Some(m) = self.layered.get(&(kind, base)) {
            return Ok(m.clone());
        }
        let cm = self.cluster_model(kind)?;
        let m = layered_fit_xy(self.x, self.y, &cm, &self.layered_config(base), self.seed)?;
        self.layered.insert((kind, base), m.clone());
        Ok(m)
    }

    pub fn stacking_config(&self, base: BaseLearner) -> StackingConfig {
        let ridge = if self.settings.lambda_cv {
            RidgeConfig {
                lambda_grid: RidgeConfig::default_grid(),
                ..self.settings.ridge.clone()
            }
        } else {
            self.settings.ridge.clone()
        };
        StackingConfig {
            layered: self.layered_config(base),
            ridge,
            mode: self.settings.meta_mode,
            folds: self.settings.stacking_folds,
        }
    }

    pub fn fit(&mut self, spec: ModelSpec) -> CliResult<ModelBody> {
        let (x, y, s, seed) = (self.x, self.y, self.settings, self.seed);
        Ok(match spec {
            ModelSpec::Single(BaseLearner::Lr) => ModelBody::Linear(ols_fit(x, y)?),
            ModelSpec::Single(BaseLearner::Ann) => ModelBody::Mlp(if s.mlp_sweep {
                mlp_sweep(x, y, &s.mlp, 6..=20, seed)?.model
            } else {
                mlp_fit(x, y, &s.mlp, seed)?
            }),
            ModelSpec::Single(BaseLearner::Adadt) => ModelBody::Boost(adaboost_fit(x, y, &s.adadt, seed)?),
            ModelSpec::Single(BaseLearner::Adarf) => {
                ModelBody::Learner(no_clustering_fit(x, y, &BaseLearner::Adarf.spec(s), seed)?)
            }
            ModelSpec::Layered(kind) => ModelBody::Layered(self.layered(kind, BaseLearner::Adarf)?),
            ModelSpec::Stacking(base) => {
                let bases = ClusterKind::ALL
                    .iter()
                    .map(|&kind| self.layered(kind, base))
                    .collect::<CliResult<Vec<_>>>()?;
                let cfg = self.stacking_config(base);
                ModelBody::Stacking(stacking_fit_with_bases(x, y, bases, &cfg, seed)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip() {
        for s in ["lr", "ann", "adadt", "adarf", "layered:ff", "layered:canopy", "stacking:lr"] {
            assert_eq!(s.parse::<ModelSpec>().unwrap().to_string(), s);
        }
        assert_eq!("stacking".parse::<ModelSpec>().unwrap(), ModelSpec::Stacking(BaseLearner::Adarf));
    }

    #[test]
    fn unknown_specs_are_config_errors() {
        for s in ["forest", "layered:dbscan", "stacking:svm", ""] {
            assert!(matches!(s.parse::<ModelSpec>(), Err(CliError::Config(_))), "{s}");
        }
    }
}
