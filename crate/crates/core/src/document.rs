//! Versioned JSON documents for trained models.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::baseline::{LinearModel, MlpModel};
use crate::ensemble::{AdaBoostModel, LayeredEnsemble, Learner, StackingModel};
use crate::error::{Error, Result};
use crate::ingest::StandardizationParams;

pub const FORMAT: &str = "windstack.model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelBody {
    Linear(LinearModel),
    Mlp(MlpModel),
    Boost(AdaBoostModel),
    Learner(Learner),
    Layered(LayeredEnsemble),
    Stacking(StackingModel),
}

impl ModelBody {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            ModelBody::Linear(m) => m.predict(x),
            ModelBody::Mlp(m) => m.predict(x),
            ModelBody::Boost(m) => m.predict(x),
            ModelBody::Learner(m) => m.predict(x),
            ModelBody::Layered(m) => m.predict(x),
            ModelBody::Stacking(m) => m.predict(x),
        }
    }
}

/// A fitted model plus what is needed to reproduce and apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    /// Short model name such as `adarf` or `layered:kmeans`.
    pub name: String,
    /// Hex SHA-256 of the configuration that produced the model.
    pub config_hash: String,
    pub seed: u64,
    pub feature_names: Vec<String>,
    /// Applied to raw features before `body` sees them.
    pub standardization: Option<StandardizationParams>,
    pub body: ModelBody,
}

impl TrainedModel {
    pub fn new(name: impl Into<String>, config_hash: impl Into<String>, seed: u64, body: ModelBody) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            name: name.into(),
            config_hash: config_hash.into(),
            seed,
            feature_names: crate::ingest::FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            standardization: None,
            body,
        }
    }

    /// Predicts from raw (unstandardized) features.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_names.len() {
            return Err(Error::Document(format!(
                "model expects {} features, got {}",
                self.feature_names.len(),
                x.len()
            )));
        }
        Ok(match &self.standardization {
            Some(s) => self.body.predict(&s.transform_row(x)?),
            None => self.body.predict(x),
        })
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TrainedModel = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        if doc.format != FORMAT || doc.version != VERSION {
            return Err(Error::Document(format!("unsupported document {} v{}", doc.format, doc.version)));
        }
        Ok(doc)
    }
}

/// Serializes NaN as `null` and reads `null` back as NaN.
pub mod nan_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// [`nan_f64`] for vectors.
pub mod nan_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|x| if x.is_nan() { None } else { Some(*x) })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Option<f64>>::deserialize(d)?
            .into_iter()
            .map(|x| x.unwrap_or(f64::NAN))
            .collect())
    }
}
