use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_xy, BaselineError};
use crate::document::{nan_f64, nan_vec};
use crate::stats::student_t_two_tailed;

/// Least-squares fit with per-term inference. Standard errors, t and p of
/// a degenerate (zero-residual) fit are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    #[serde(with = "nan_vec")]
    pub std_errors: Vec<f64>,
    #[serde(with = "nan_vec")]
    pub t_stats: Vec<f64>,
    #[serde(with = "nan_vec")]
    pub p_values: Vec<f64>,
    #[serde(with = "nan_f64")]
    pub intercept_se: f64,
    #[serde(with = "nan_f64")]
    pub intercept_t: f64,
    #[serde(with = "nan_f64")]
    pub intercept_p: f64,
    pub residual_variance: f64,
    pub n: usize,
    pub d: usize,
    pub degenerate: bool,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }
}

/// Ordinary least squares with an intercept, solved by SVD.
pub fn ols_fit(x: ArrayView2<'_, f64>, y: &[f64]) -> Result<LinearModel, BaselineError> {
    check_xy(x, y)?;
    let (n, d) = x.dim();
    if n < d + 2 {
        return Err(BaselineError::TooFewRows { needed: d + 2, got: n });
    }
    let p = d + 1;
    let a = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x[[i, j - 1]] });
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin / smax < 1e-10 {
        return Err(BaselineError::RankDeficient);
    }
    let beta = svd.solve(&b, 0.0).map_err(|_| BaselineError::RankDeficient)?;
    let resid = &b - &a * &beta;
    let sse = resid.norm_squared();
    let dof = (n - p) as f64;
    let s2 = sse / dof;

    // (AᵀA)⁻¹ = V Σ⁻² Vᵀ, only the diagonal is needed
    let v_t = svd.v_t.as_ref().expect("requested");
    let diag: Vec<f64> = (0..p)
        .map(|j| (0..p).map(|r| (v_t[(r, j)] / svd.singular_values[r]).powi(2)).sum())
        .collect();

    let scale = b.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let degenerate = sse <= 1e-24 * scale;
    let term = |j: usize| -> (f64, f64, f64) {
        if degenerate {
            return (f64::NAN, f64::NAN, f64::NAN);
        }
        let se = (s2 * diag[j]).sqrt();
        let t = beta[j] / se;
        (se, t, student_t_two_tailed(t, dof))
    };
    let (intercept_se, intercept_t, intercept_p) = term(0);
    let mut std_errors = Vec::with_capacity(d);
    let mut t_stats = Vec::with_capacity(d);
    let mut p_values = Vec::with_capacity(d);
    for j in 1..p {
        let (se, t, pv) = term(j);
        std_errors.push(se);
        t_stats.push(t);
        p_values.push(pv);
    }
    Ok(LinearModel {
        coefficients: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        std_errors,
        t_stats,
        p_values,
        intercept_se,
        intercept_t,
        intercept_p,
        residual_variance: s2,
        n,
        d,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisRow {
    pub feature: String,
    pub index: usize,
    #[serde(with = "nan_f64")]
    pub t: f64,
    #[serde(with = "nan_f64")]
    pub p: f64,
    pub significant: bool,
}

/// Features ranked by |t|, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub alpha: f64,
    pub rows: Vec<DiagnosisRow>,
}

impl Diagnosis {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("feature,t,p,significant\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.feature, r.t, r.p, r.significant));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), BaselineError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

pub fn feature_diagnosis(model: &LinearModel, alpha: f64) -> Diagnosis {
    let names: Vec<String> = (0..model.d).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    feature_diagnosis_named(model, alpha, &refs)
}

pub fn feature_diagnosis_named(model: &LinearModel, alpha: f64, names: &[&str]) -> Diagnosis {
    let mut rows: Vec<DiagnosisRow> = (0..model.d)
        .map(|j| DiagnosisRow {
            feature: names.get(j).map_or_else(|| format!("x{j}"), |s| s.to_string()),
            index: j,
            t: model.t_stats[j],
            p: model.p_values[j],
            significant: model.p_values[j] < alpha,
        })
        .collect();
    // NaN statistics sort last
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.t.abs(), b.t.abs());
        match (ka.is_nan(), kb.is_nan()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => kb.total_cmp(&ka),
        }
    });
    Diagnosis { alpha, rows }
}
