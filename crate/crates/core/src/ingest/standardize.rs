use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError};

/// Columns with a sample standard deviation below this are degenerate.
const DEGENERATE_STD: f64 = 1e-12;

/// Per-column z-score transform fitted on a training block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Degenerate columns map to 0 and invert back to their mean.
    pub degenerate: Vec<bool>,
}

impl StandardizationParams {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self, IngestError> {
        let n = x.nrows();
        if n < 2 {
            return Err(IngestError::TooFewRows { needed: 2, got: n });
        }
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        let mut degenerate = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let std = (ss / (n - 1) as f64).sqrt();
            let flat = std < DEGENERATE_STD;
            means.push(mean);
            stds.push(if flat { 0.0 } else { std });
            degenerate.push(flat);
        }
        Ok(Self {
            means,
            stds,
            degenerate,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.means.len()
    }

    fn check(&self, got: usize) -> Result<(), IngestError> {
        if got != self.n_columns() {
            return Err(IngestError::SchemaMismatch {
                expected: self.n_columns(),
                got,
            });
        }
        Ok(())
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        if self.degenerate[j] {
            0.0
        } else {
            (v - self.means[j]) / self.stds[j]
        }
    }

    pub fn inverse_value(&self, j: usize, z: f64) -> f64 {
        if self.degenerate[j] {
            self.means[j]
        } else {
            z * self.stds[j] + self.means[j]
        }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, IngestError> {
        self.check(x.ncols())?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.transform_value(j, *v);
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>, IngestError> {
        self.check(x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| self.transform_value(j, v))
            .collect())
    }

    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>, IngestError> {
        self.check(z.ncols())?;
        let mut out = z.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.inverse_value(j, *v);
            }
        }
        Ok(out)
    }
}

/// Fits per-column mean and sample standard deviation on the training rows.
pub fn fit_standardization(train: &Dataset) -> Result<StandardizationParams, IngestError> {
    StandardizationParams::fit(train.features.view())
}

/// Applies `params` to the feature matrix; targets are untouched.
pub fn apply_standardization(
    params: &StandardizationParams,
    ds: &Dataset,
) -> Result<Dataset, IngestError> {
    Ok(Dataset {
        features: params.transform(ds.features.view())?,
        targets: ds.targets.clone(),
        timestamps: ds.timestamps.clone(),
        standardization: Some(params.clone()),
    })
}
