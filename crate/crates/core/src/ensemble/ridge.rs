use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::EnsembleError;
use crate::ingest::kfold_indices;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    /// Squared L2 norm (ridge).
    #[default]
    L2,
    /// L1 norm (lasso), solved by coordinate descent.
    L1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub penalty: Penalty,
    /// Scale meta-features to unit variance before penalizing.
    pub standardize: bool,
    /// Candidate strengths for cross-validated selection; empty keeps
    /// `lambda`.
    pub lambda_grid: Vec<f64>,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            penalty: Penalty::L2,
            standardize: true,
            lambda_grid: Vec::new(),
        }
    }
}

impl RidgeConfig {
    /// `{1e-4, 1e-3, …, 1e1}`.
    pub fn default_grid() -> Vec<f64> {
        (-4..=1).map(|e| 10f64.powi(e)).collect()
    }
}

/// Affine map `b + Σ w_j z_j` in the original meta-feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub penalty: Penalty,
}

impl RidgeParams {
    pub fn predict(&self, z: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_all(&self, z: ArrayView2<'_, f64>) -> Vec<f64> {
        z.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }
}

/// L2-penalized least squares with an unpenalized intercept:
/// `w = (ZcᵀZc + λI)⁻¹ Zcᵀyc` on centered data.
pub fn ridge_fit(z: ArrayView2<'_, f64>, y: &[f64], lambda: f64) -> Result<RidgeParams, EnsembleError> {
    ridge_fit_with(
        z,
        y,
        &RidgeConfig {
            lambda,
            penalty: Penalty::L2,
            standardize: false,
            lambda_grid: Vec::new(),
        },
    )
}

pub fn ridge_fit_with(
    z: ArrayView2<'_, f64>,
    y: &[f64],
    config: &RidgeConfig,
) -> Result<RidgeParams, EnsembleError> {
    let (n, m) = z.dim();
    if y.len() != n {
        return Err(EnsembleError::LengthMismatch { rows: n, targets: y.len() });
    }
    if n <= m {
        return Err(EnsembleError::TooFewRows { needed: m + 1, got: n });
    }
    let lambda = config.lambda;
    if !(lambda >= 0.0) {
        return Err(EnsembleError::BadConfig(format!("lambda {lambda} must be >= 0")));
    }
    let z_mean: Vec<f64> = z.mean_axis(Axis(0)).expect("rows").to_vec();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let scale: Vec<f64> = (0..m)
        .map(|j| {
            if !config.standardize {
                return 1.0;
            }
            let s = (z.column(j).iter().map(|v| (v - z_mean[j]).powi(2)).sum::<f64>()
                / (n - 1) as f64)
                .sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let zc = DMatrix::from_fn(n, m, |i, j| (z[[i, j]] - z_mean[j]) / scale[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - y_mean);

    let w_std = match config.penalty {
        Penalty::L2 => {
            let mut a = zc.transpose() * &zc;
            let b = zc.transpose() * &yc;
            if lambda == 0.0 {
                let sv = a.clone().singular_values();
                let max = sv.max();
                if sv.min() <= max * 1e-12 || max == 0.0 {
                    return Err(EnsembleError::SingularSystem);
                }
            }
            for j in 0..m {
                a[(j, j)] += lambda;
            }
            match a.clone().cholesky() {
                Some(ch) => ch.solve(&b),
                None => a.lu().solve(&b).ok_or(EnsembleError::SingularSystem)?,
            }
        }
        Penalty::L1 => lasso(&zc, &yc, lambda),
    };
    let weights: Vec<f64> = (0..m).map(|j| w_std[j] / scale[j]).collect();
    let intercept = y_mean - weights.iter().zip(&z_mean).map(|(w, mu)| w * mu).sum::<f64>();
    Ok(RidgeParams {
        weights,
        intercept,
        lambda,
        penalty: config.penalty,
    })
}

/// Coordinate descent for `½‖y - Zw‖² + λ‖w‖₁` on centered data.
fn lasso(z: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let m = z.ncols();
    let norms: Vec<f64> = (0..m).map(|j| z.column(j).norm_squared()).collect();
    let mut w: DVector<f64> = DVector::zeros(m);
    let mut resid = y.clone();
    for _ in 0..10_000 {
        let mut max_step: f64 = 0.0;
        for j in 0..m {
            if norms[j] == 0.0 {
                continue;
            }
            let col = z.column(j);
            let rho: f64 = col.dot(&resid) + norms[j] * w[j];
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / norms[j];
            let step = new - w[j];
            if step != 0.0 {
                resid.axpy(-step, &col, 1.0);
                w[j] = new;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step < 1e-12 {
            break;
        }
    }
    w
}

/// Picks the grid value with the lowest `folds`-fold CV squared error and
/// refits on all rows.
pub fn ridge_cv(
    z: ArrayView2<'_, f64>,
    y: &[f64],
    config: &RidgeConfig,
    folds: usize,
    seed: u64,
) -> Result<RidgeParams, EnsembleError> {
    let grid = if config.lambda_grid.is_empty() {
        vec![config.lambda]
    } else {
        config.lambda_grid.clone()
    };
    let assignment = kfold_indices(z.nrows(), folds, seed)
        .map_err(|e| EnsembleError::BadConfig(e.to_string()))?;
    let mut best = (f64::INFINITY, grid[0]);
    for &lambda in &grid {
        let cfg = RidgeConfig { lambda, ..config.clone() };
        let mut sse = 0.0;
        for fold in &assignment {
            let mut held = vec![false; z.nrows()];
            fold.iter().for_each(|&i| held[i] = true);
            let train: Vec<usize> = (0..z.nrows()).filter(|&i| !held[i]).collect();
            let zt = z.select(Axis(0), &train);
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let p = ridge_fit_with(zt.view(), &yt, &cfg)?;
            sse += fold
                .iter()
                .map(|&i| (p.predict(&z.row(i).to_vec()) - y[i]).powi(2))
                .sum::<f64>();
        }
        if sse < best.0 {
            best = (sse, lambda);
        }
    }
    ridge_fit_with(z, y, &RidgeConfig { lambda: best.1, ..config.clone() })
}
