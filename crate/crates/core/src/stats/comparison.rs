use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{chi_square_sf, studentized_range_quantile, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Per-row ranks, ascending (rank 1 is the lowest value), ties averaged.
    pub ranks_used: Array2<f64>,
    pub mean_ranks: Vec<f64>,
    pub tie_corrected: bool,
}

/// Ranks of `row` in ascending order with ties sharing their average rank.
/// Also returns `Σ (t³ - t)` over tie groups.
fn rank_row(row: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let avg = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Friedman rank test over an `n_datasets × k_models` matrix where lower
/// values are better.
pub fn friedman(results: ArrayView2<'_, f64>) -> Result<FriedmanResult, StatsError> {
    friedman_with(results, false)
}

/// Friedman test; with `tie_correction` the statistic is divided by
/// `1 - Σ(t³ - t) / (n·k·(k² - 1))`.
pub fn friedman_with(
    results: ArrayView2<'_, f64>,
    tie_correction: bool,
) -> Result<FriedmanResult, StatsError> {
    let (n, k) = results.dim();
    if n < 2 {
        return Err(StatsError::TooFewRows { needed: 2, got: n });
    }
    if k < 2 {
        return Err(StatsError::TooFewColumns(k));
    }
    if results.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut ranks = Array2::zeros((n, k));
    let mut ties = 0.0;
    for (i, row) in results.rows().into_iter().enumerate() {
        let (r, t) = rank_row(&row.to_vec());
        ties += t;
        for (j, v) in r.into_iter().enumerate() {
            ranks[[i, j]] = v;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let mean_ranks: Vec<f64> = (0..k).map(|j| ranks.column(j).sum() / nf).collect();
    let center = 0.5 * (kf + 1.0);
    let spread: f64 = mean_ranks.iter().map(|r| (r - center).powi(2)).sum();
    let mut statistic = 12.0 * nf / (kf * (kf + 1.0)) * spread;
    if tie_correction {
        let c = 1.0 - ties / (nf * kf * (kf * kf - 1.0));
        statistic = if c > 0.0 { statistic / c } else { 0.0 };
    }
    Ok(FriedmanResult {
        statistic,
        df: k - 1,
        p_value: chi_square_sf(statistic, (k - 1) as f64).clamp(0.0, 1.0),
        ranks_used: ranks,
        mean_ranks,
        tie_corrected: tie_correction,
    })
}

/// One pairwise interval for `mean(a) - mean(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub a: usize,
    pub b: usize,
    pub mean_diff: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TukeyPair {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub pairs: Vec<TukeyPair>,
    pub alpha: f64,
    pub q: f64,
    /// Pooled within-group mean squared error.
    pub mse: f64,
    pub df: usize,
}

/// Simultaneous Tukey–Kramer intervals for all pairs of groups.
pub fn tukey(groups: &[Vec<f64>], alpha: f64) -> Result<TukeyResult, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups(k));
    }
    if let Some(g) = groups.iter().position(|g| g.len() < 2) {
        return Err(StatsError::TooFewValues(g));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadArgument(format!("alpha={alpha}")));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let means: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len() as f64)
        .collect();
    let total: usize = groups.iter().map(Vec::len).sum();
    let df = total - k;
    let ss: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let mse = ss / df as f64;
    let q = studentized_range_quantile(1.0 - alpha, k, df as f64)?;
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let half = q / 2f64.sqrt()
                * mse.sqrt()
                * (1.0 / groups[a].len() as f64 + 1.0 / groups[b].len() as f64).sqrt();
            let d = means[a] - means[b];
            pairs.push(TukeyPair {
                a,
                b,
                mean_diff: d,
                lower: d - half,
                upper: d + half,
            });
        }
    }
    Ok(TukeyResult {
        pairs,
        alpha,
        q,
        mse,
        df,
    })
}
