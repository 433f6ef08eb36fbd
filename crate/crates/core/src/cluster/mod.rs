//! K-means, EM, farthest-first and Canopy clustering with cluster-count
//! selection.
//!
//! All algorithms use Euclidean distance on the (standardized) feature
//! matrix. Fitted models assign unseen rows by nearest center, except EM
//! which assigns by maximum posterior responsibility.

mod canopy;
mod em;
mod farthest;
mod kmeans;
mod select;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canopy::{canopy_fit, canopy_thresholds, CanopyParams};
pub use em::{em_fit, EmParams};
pub use farthest::{ff_fit, ff_fit_from, FfCriterion};
pub use kmeans::{kmeans_fit, kmeans_from_centers, KMeansParams};
pub use select::{
    elbow_curve, empirical_k, purity, xmeans, ElbowCurve, EmpiricalK, XMeansResult,
};

/// Variance floor for EM components.
pub const VARIANCE_FLOOR: f64 = 1e-6;
const DOC_FORMAT: &str = "windstack.cluster-model";
const DOC_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k = {k} exceeds the number of rows {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1")]
    KZero,
    #[error("invalid k range {min}..={max}")]
    BadRange { min: usize, max: usize },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("EM component {0} collapsed after reinitialization")]
    DegenerateComponent(usize),
    #[error("canopy could not reach k = {target}; achieved k = {}", achieved.model.k)]
    Unreachable {
        target: usize,
        achieved: Box<Clustering>,
    },
    #[error("cluster model document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClusterKind {
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "em")]
    Em,
    #[serde(rename = "ff")]
    FarthestFirst,
    #[serde(rename = "canopy")]
    Canopy,
}

impl ClusterKind {
    pub const ALL: [ClusterKind; 4] = [
        ClusterKind::KMeans,
        ClusterKind::Em,
        ClusterKind::FarthestFirst,
        ClusterKind::Canopy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClusterKind::KMeans => "kmeans",
            ClusterKind::Em => "em",
            ClusterKind::FarthestFirst => "ff",
            ClusterKind::Canopy => "canopy",
        }
    }
}

impl fmt::Display for ClusterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClusterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClusterKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown clustering `{s}` (expected kmeans, em, ff or canopy)"))
    }
}

/// Per-component parameters of a diagonal Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmExtras {
    /// `k × d` diagonal variances.
    pub variances: Array2<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanopyExtras {
    pub t1: f64,
    pub t2: f64,
}

/// A fitted partition plus the rule for assigning unseen rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub kind: ClusterKind,
    pub k: usize,
    /// `k × d` centers; component means for EM, data rows for FF.
    pub centers: Array2<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em: Option<EmExtras>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canopy: Option<CanopyExtras>,
    pub seed: u64,
}

/// Result of a fit: the model, training labels and the per-iteration
/// objective (SSE for K-means, log-likelihood for EM, covering radius for
/// FF, canopy count per threshold round for Canopy).
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub model: ClusterModel,
    pub labels: Vec<usize>,
    pub objective_trace: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    model: ClusterModel,
}

impl ClusterModel {
    pub fn n_features(&self) -> usize {
        self.centers.ncols()
    }

    /// Assigns one row. Nearest center with ties to the lowest id, or the
    /// highest posterior for EM.
    pub fn assign(&self, x: &[f64]) -> Result<usize, ClusterError> {
        if x.len() != self.n_features() {
            return Err(ClusterError::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClusterError::NonFiniteInput);
        }
        Ok(self.assign_unchecked(x))
    }

    pub(crate) fn assign_unchecked(&self, x: &[f64]) -> usize {
        match &self.em {
            Some(extras) => em::most_probable(self, extras, x),
            None => nearest(self.centers.view(), x).0,
        }
    }

    /// Assigns every row of `x`.
    pub fn assign_all(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>, ClusterError> {
        check_matrix(x)?;
        if x.ncols() != self.n_features() {
            return Err(ClusterError::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|r| self.assign_unchecked(r.as_slice().unwrap_or(&r.to_vec())))
            .collect())
    }

    /// Checks the structural invariants of the model.
    pub fn validate(&self) -> Result<(), ClusterError> {
        let bad = |m: &str| Err(ClusterError::Document(m.to_string()));
        if self.k == 0 || self.centers.nrows() != self.k {
            return bad("center count does not match k");
        }
        if self.centers.iter().any(|v| !v.is_finite()) {
            return bad("non-finite center");
        }
        if let Some(e) = &self.em {
            if e.weights.len() != self.k || e.variances.dim() != self.centers.dim() {
                return bad("EM extras have the wrong shape");
            }
            if (e.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad("EM weights do not sum to 1");
            }
            if e.variances.iter().any(|&v| !(v >= VARIANCE_FLOOR)) {
                return bad("EM variance below floor");
            }
        }
        if let Some(c) = &self.canopy {
            if !(c.t1 > c.t2 && c.t2 > 0.0) {
                return bad("canopy thresholds must satisfy T1 > T2 > 0");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument {
            format: DOC_FORMAT.into(),
            version: DOC_VERSION,
            model: self.clone(),
        })
        .expect("cluster model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClusterError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| ClusterError::Document(e.to_string()))?;
        if doc.format != DOC_FORMAT || doc.version != DOC_VERSION {
            return Err(ClusterError::Document(format!(
                "unsupported document {} v{}",
                doc.format, doc.version
            )));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }
}

/// Stand-alone form of [`ClusterModel::assign`].
pub fn assign(model: &ClusterModel, x: &[f64]) -> Result<usize, ClusterError> {
    model.assign(x)
}

/// Sum over rows of the squared distance to the assigned center.
pub fn total_sse(model: &ClusterModel, x: ArrayView2<'_, f64>) -> Result<f64, ClusterError> {
    let labels = model.assign_all(x)?;
    Ok(x.rows()
        .into_iter()
        .zip(labels)
        .map(|(r, c)| sq_dist_iter(r.iter(), model.centers.row(c).iter()))
        .sum())
}

/// Settings shared by the kind-dispatching [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub n_restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Accept the closest achievable canopy count instead of failing.
    pub accept_unreachable: bool,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            n_restarts: 5,
            max_iter: 300,
            tol: 1e-6,
            accept_unreachable: true,
        }
    }
}

/// Fits the clustering of the given kind.
pub fn fit(
    kind: ClusterKind,
    x: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    settings: &FitSettings,
) -> Result<Clustering, ClusterError> {
    let km = KMeansParams {
        max_iter: settings.max_iter,
        tol: settings.tol,
        n_restarts: settings.n_restarts,
    };
    match kind {
        ClusterKind::KMeans => kmeans_fit(x, k, seed, &km),
        ClusterKind::Em => em_fit(
            x,
            k,
            seed,
            &EmParams {
                max_iter: settings.max_iter,
                init: km,
                ..EmParams::default()
            },
        ),
        ClusterKind::FarthestFirst => ff_fit(x, k, seed),
        ClusterKind::Canopy => match canopy_fit(x, k, seed, &CanopyParams::default()) {
            Err(ClusterError::Unreachable { achieved, .. }) if settings.accept_unreachable => {
                Ok(*achieved)
            }
            other => other,
        },
    }
}

pub(crate) fn check_matrix(x: ArrayView2<'_, f64>) -> Result<(), ClusterError> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFiniteInput);
    }
    Ok(())
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<(), ClusterError> {
    if k == 0 {
        return Err(ClusterError::KZero);
    }
    if k > n {
        return Err(ClusterError::KTooLarge { k, n });
    }
    Ok(())
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sq_dist_iter<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest row of `centers` to `x` and the squared distance; ties go to the
/// lowest index.
pub(crate) fn nearest(centers: ArrayView2<'_, f64>, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.rows().into_iter().enumerate() {
        let d = match c.as_slice() {
            Some(s) => sq_dist(s, x),
            None => sq_dist_iter(c.iter(), x.iter()),
        };
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Row-major owned copy so rows can be borrowed as slices.
pub(crate) fn rows_of(x: ArrayView2<'_, f64>) -> Vec<&[f64]> {
    let d = x.ncols();
    let s = x.to_slice().expect("standard layout");
    if d == 0 {
        return vec![&[][..]; x.nrows()];
    }
    s.chunks_exact(d).collect()
}

/// Labels by nearest center plus the total SSE.
pub(crate) fn nearest_labels(rows: &[&[f64]], centers: ArrayView2<'_, f64>) -> (Vec<usize>, f64) {
    let mut sse = 0.0;
    let labels = rows
        .iter()
        .map(|r| {
            let (j, d) = nearest(centers, r);
            sse += d;
            j
        })
        .collect();
    (labels, sse)
}
