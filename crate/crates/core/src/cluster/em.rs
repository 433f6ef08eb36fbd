use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{
    check_k, check_matrix, kmeans_fit, rows_of, ClusterError, ClusterKind, ClusterModel,
    Clustering, EmExtras, KMeansParams, VARIANCE_FLOOR,
};
use crate::seed::{self, Role};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmParams {
    pub max_iter: usize,
    /// Stop once the mean per-row log-likelihood gains less than this.
    pub tol: f64,
    /// K-means settings for the initial partition.
    pub init: KMeansParams,
}

impl Default for EmParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-8,
            init: KMeansParams::default(),
        }
    }
}

struct Mixture {
    means: Array2<f64>,
    vars: Array2<f64>,
    weights: Vec<f64>,
}

impl Mixture {
    fn log_joint(&self, x: &[f64], out: &mut [f64]) {
        log_joint(self.means.view(), self.vars.view(), &self.weights, x, out);
    }
}

/// Per-component `ln w_j + ln N(x | mu_j, diag var_j)`.
fn log_joint(
    means: ArrayView2<'_, f64>,
    vars: ArrayView2<'_, f64>,
    weights: &[f64],
    x: &[f64],
    out: &mut [f64],
) {
    for (j, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for ((v, m), s2) in x.iter().zip(means.row(j)).zip(vars.row(j)) {
            s += (v - m) * (v - m) / s2 + s2.ln() + LN_2PI;
        }
        *o = weights[j].ln() - 0.5 * s;
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(super) fn most_probable(model: &ClusterModel, extras: &EmExtras, x: &[f64]) -> usize {
    let mut lj = vec![0.0; model.k];
    log_joint(model.centers.view(), extras.variances.view(), &extras.weights, x, &mut lj);
    argmax(&lj)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = j;
        }
    }
    best
}

/// Diagonal-covariance Gaussian mixture by expectation maximization,
/// initialized from K-means.
///
/// A component whose weight falls below `1/(10n)` is reinitialized once at
/// the worst-explained row; the log-likelihood trace restarts at that point.
/// A second collapse is an error.
pub fn em_fit(
    x: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    params: &EmParams,
) -> Result<Clustering, ClusterError> {
    check_matrix(x)?;
    let (n, d) = x.dim();
    check_k(k, n)?;
    let owned = x.as_standard_layout();
    let rows = rows_of(owned.view());
    let init = kmeans_fit(x, k, seed::derive(seed, Role::Init, 0), &params.init)?;

    let global_var: Vec<f64> = (0..d)
        .map(|c| {
            let col = x.column(c);
            let m = col.mean().unwrap_or(0.0);
            (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).max(VARIANCE_FLOOR)
        })
        .collect();
    let mut mix = Mixture {
        means: init.model.centers.clone(),
        vars: Array2::zeros((k, d)),
        weights: vec![0.0; k],
    };
    let mut resp = Array2::<f64>::zeros((n, k));
    for (i, &c) in init.labels.iter().enumerate() {
        resp[[i, c]] = 1.0;
    }
    m_step(&rows, &resp, &mut mix, &global_var);

    let mut trace = Vec::new();
    let mut reinitialized = false;
    let mut lj = vec![0.0; k];
    let mut worst_row = 0;
    for _ in 0..params.max_iter {
        // E-step
        let mut ll = 0.0;
        let mut worst = f64::INFINITY;
        for (i, r) in rows.iter().enumerate() {
            mix.log_joint(r, &mut lj);
            let lse = log_sum_exp(&lj);
            ll += lse;
            if lse < worst {
                worst = lse;
                worst_row = i;
            }
            for j in 0..k {
                resp[[i, j]] = (lj[j] - lse).exp();
            }
        }
        let prev = trace.last().copied();
        trace.push(ll);
        if let Some(p) = prev {
            if (ll - p) / (n as f64) < params.tol {
                break;
            }
        }
        // M-step
        m_step(&rows, &resp, &mut mix, &global_var);
        if let Some(j) = mix.weights.iter().position(|&w| w < 1.0 / (10.0 * n as f64)) {
            if reinitialized {
                return Err(ClusterError::DegenerateComponent(j));
            }
            reinitialized = true;
            mix.means.row_mut(j).assign(&ndarray::aview1(rows[worst_row]));
            mix.vars.row_mut(j).assign(&ndarray::aview1(&global_var));
            mix.weights[j] = 1.0 / k as f64;
            let total: f64 = mix.weights.iter().sum();
            mix.weights.iter_mut().for_each(|w| *w /= total);
            trace.clear();
        }
    }

    let labels = rows
        .iter()
        .map(|r| {
            mix.log_joint(r, &mut lj);
            argmax(&lj)
        })
        .collect();
    Ok(Clustering {
        model: ClusterModel {
            kind: ClusterKind::Em,
            k,
            centers: mix.means,
            em: Some(EmExtras {
                variances: mix.vars,
                weights: mix.weights,
            }),
            canopy: None,
            seed,
        },
        labels,
        objective_trace: trace,
    })
}

fn m_step(rows: &[&[f64]], resp: &Array2<f64>, mix: &mut Mixture, global_var: &[f64]) {
    let (n, k) = resp.dim();
    let d = mix.means.ncols();
    for j in 0..k {
        let nk: f64 = resp.column(j).sum();
        mix.weights[j] = nk / n as f64;
        if nk <= 0.0 {
            mix.vars.row_mut(j).assign(&ndarray::aview1(global_var));
            continue;
        }
        let mut mean = vec![0.0; d];
        for (r, &w) in rows.iter().zip(resp.column(j)) {
            if w != 0.0 {
                for (m, v) in mean.iter_mut().zip(r.iter()) {
                    *m += w * v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk);
        let mut var = vec![0.0; d];
        for (r, &w) in rows.iter().zip(resp.column(j)) {
            if w != 0.0 {
                for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                    *s += w * (v - m) * (v - m);
                }
            }
        }
        var.iter_mut().for_each(|s| *s = (*s / nk).max(VARIANCE_FLOOR));
        mix.means.row_mut(j).assign(&ndarray::aview1(&mean));
        mix.vars.row_mut(j).assign(&ndarray::aview1(&var));
    }
    let total: f64 = mix.weights.iter().sum();
    mix.weights.iter_mut().for_each(|w| *w /= total);
}
