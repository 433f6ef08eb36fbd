use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::kmeans::lloyd;
use super::{
    check_k, check_matrix, kmeans_fit, nearest, rows_of, ClusterError, ClusterModel, Clustering,
    KMeansParams,
};
use crate::seed::{self, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalK {
    pub raw: f64,
    pub rounded: usize,
}

/// Rule-of-thumb cluster count `1 + 3.2·log10(n)`.
pub fn empirical_k(n: usize) -> EmpiricalK {
    let raw = 1.0 + 3.2 * (n.max(1) as f64).log10();
    EmpiricalK {
        raw,
        rounded: raw.round() as usize,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    /// `(k, SSE)` with k ascending.
    pub entries: Vec<(usize, f64)>,
    /// Advisory knee: the k with the largest second difference of SSE.
    pub knee: Option<usize>,
}

impl ElbowCurve {
    /// Writes `k,sse` rows for plotting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,sse")?;
        for (k, sse) in &self.entries {
            writeln!(w, "{k},{sse}")?;
        }
        Ok(())
    }
}

/// SSE of the best K-means fit for each k in `k_range`.
///
/// Each k takes the best of `n_restarts` k-means++ starts and a warm start
/// from the previous k's solution with the worst-covered rows added as new
/// centers, so the curve cannot rise.
pub fn elbow_curve(
    x: ArrayView2<'_, f64>,
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    n_restarts: usize,
) -> Result<ElbowCurve, ClusterError> {
    check_matrix(x)?;
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo > hi {
        return Err(ClusterError::BadRange { min: lo, max: hi });
    }
    check_k(lo, x.nrows())?;
    check_k(hi, x.nrows())?;
    let owned = x.as_standard_layout();
    let rows = rows_of(owned.view());
    let params = KMeansParams {
        n_restarts: n_restarts.max(1),
        ..KMeansParams::default()
    };
    let mut entries = Vec::new();
    let mut prev: Option<Clustering> = None;
    for k in lo..=hi {
        let mut best = kmeans_fit(x, k, seed::derive(seed, Role::Restart, k as u64), &params)?;
        if let Some(p) = &prev {
            let warm = lloyd(&rows, grow_centers(&rows, &p.model.centers, k), &params, seed);
            if sse(&warm) < sse(&best) {
                best = warm;
            }
        }
        entries.push((k, sse(&best)));
        prev = Some(best);
    }
    let knee = (1..entries.len().saturating_sub(1))
        .map(|i| {
            let d2 = entries[i - 1].1 - 2.0 * entries[i].1 + entries[i + 1].1;
            (entries[i].0, d2)
        })
        .fold(None, |b: Option<(usize, f64)>, c| match b {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
        .map(|(k, _)| k);
    Ok(ElbowCurve { entries, knee })
}

fn sse(c: &Clustering) -> f64 {
    *c.objective_trace.last().expect("non-empty trace")
}

/// Extends `centers` to `k` rows by repeatedly adding the row farthest from
/// its nearest center.
fn grow_centers(rows: &[&[f64]], centers: &Array2<f64>, k: usize) -> Array2<f64> {
    let mut out = centers.clone();
    while out.nrows() < k {
        let mut far = (0, -1.0);
        for (i, r) in rows.iter().enumerate() {
            let d = nearest(out.view(), r).1;
            if d > far.1 {
                far = (i, d);
            }
        }
        out.push_row(ndarray::aview1(rows[far.0])).expect("matching width");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct XMeansResult {
    pub best_k: usize,
    pub best_model: ClusterModel,
    /// Whole-data BIC for each k visited, k ascending.
    pub bic_by_k: Vec<(usize, f64)>,
}

/// BIC of a hard partition under identical spherical Gaussians, one shared
/// variance estimated with `R - K` degrees of freedom.
fn bic(sizes: &[usize], sse: f64, d: usize) -> f64 {
    let r: f64 = sizes.iter().sum::<usize>() as f64;
    let k = sizes.iter().filter(|&&s| s > 0).count() as f64;
    let df = d as f64 * (r - k);
    if df <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let var = (sse / df).max(1e-300);
    let mix: f64 = sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| s as f64 * (s as f64 / r).ln())
        .sum();
    let loglik = mix - 0.5 * r * d as f64 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * df;
    let params = k * (d as f64 + 1.0);
    loglik - 0.5 * params * r.ln()
}

fn partition_bic(rows: &[&[f64]], c: &Clustering, d: usize) -> f64 {
    let mut sizes = vec![0; c.model.k];
    c.labels.iter().for_each(|&l| sizes[l] += 1);
    let _ = rows;
    bic(&sizes, sse(c), d)
}

/// X-means: start from K-means at `k_min` and split clusters whose local
/// two-center structure improves the BIC, until no split is accepted or
/// `k_max` is reached.
pub fn xmeans(
    x: ArrayView2<'_, f64>,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<XMeansResult, ClusterError> {
    check_matrix(x)?;
    let (n, d) = x.dim();
    if k_min == 0 || k_min > k_max {
        return Err(ClusterError::BadRange { min: k_min, max: k_max });
    }
    check_k(k_max, n)?;
    let owned = x.as_standard_layout();
    let rows = rows_of(owned.view());
    let params = KMeansParams {
        n_restarts: 3,
        ..KMeansParams::default()
    };
    let mut current = kmeans_fit(x, k_min, seed::derive(seed, Role::Restart, 0), &params)?;
    let mut visited: BTreeMap<usize, (f64, ClusterModel)> = BTreeMap::new();
    visited.insert(k_min, (partition_bic(&rows, &current, d), current.model.clone()));

    let mut round = 0u64;
    while current.model.k < k_max {
        let k = current.model.k;
        let mut proposals: Vec<(f64, usize, Array2<f64>)> = Vec::new();
        for j in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| current.labels[i] == j).collect();
            if members.len() < 4 {
                continue;
            }
            let sub = x.select(Axis(0), &members);
            let sub_rows = rows_of(sub.view());
            let center = current.model.centers.row(j);
            let parent_sse: f64 = sub_rows
                .iter()
                .map(|r| super::sq_dist(r, center.as_slice().unwrap()))
                .sum();
            let parent = bic(&[members.len()], parent_sse, d);

            let mut rng = seed::rng_for(seed, Role::Split, round * 4096 + j as u64);
            let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let radius = (parent_sse / members.len() as f64).sqrt();
            dir.iter_mut().for_each(|v| *v *= 0.5 * radius / norm);
            let mut init = Array2::zeros((2, d));
            for c in 0..d {
                init[[0, c]] = center[c] + dir[c];
                init[[1, c]] = center[c] - dir[c];
            }
            let child = lloyd(&sub_rows, init, &KMeansParams::default(), seed);
            let mut sizes = [0usize; 2];
            child.labels.iter().for_each(|&l| sizes[l] += 1);
            if sizes.contains(&0) {
                continue;
            }
            let child_bic = bic(&sizes, sse(&child), d);
            if child_bic > parent {
                proposals.push((child_bic - parent, j, child.model.centers));
            }
        }
        if proposals.is_empty() {
            break;
        }
        // one split per round so every k on the way is scored
        proposals.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        proposals.truncate(1);
        let mut split: Vec<Option<Array2<f64>>> = vec![None; k];
        for (_, j, c) in proposals {
            split[j] = Some(c);
        }
        let mut centers = Array2::zeros((0, d));
        for (j, s) in split.iter().enumerate() {
            match s {
                Some(c) => {
                    for r in c.rows() {
                        centers.push_row(r).expect("width");
                    }
                }
                None => centers.push_row(current.model.centers.row(j)).expect("width"),
            }
        }
        current = lloyd(&rows, centers, &KMeansParams::default(), seed);
        visited.insert(
            current.model.k,
            (partition_bic(&rows, &current, d), current.model.clone()),
        );
        round += 1;
    }

    let bic_by_k: Vec<(usize, f64)> = visited.iter().map(|(&k, (b, _))| (k, *b)).collect();
    let (best_k, _) = bic_by_k
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    let best_k = if best_k == 0 { k_min } else { best_k };
    let best_model = visited[&best_k].1.clone();
    Ok(XMeansResult {
        best_k,
        best_model,
        bic_by_k,
    })
}

/// Fraction of rows whose true label is the majority label of their
/// assigned cluster.
pub fn purity(labels: &[usize], truth: &[usize], n_true: usize) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; n_true]; k];
    for (&l, &t) in labels.iter().zip(truth) {
        table[l][t] += 1;
    }
    let hit: usize = table.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    hit as f64 / labels.len().max(1) as f64
}
