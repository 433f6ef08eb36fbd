use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_k, check_matrix, nearest_labels, rows_of, sq_dist, ClusterError, ClusterKind,
    ClusterModel, Clustering,
};
use crate::seed::{self, Role};

/// How a candidate's distance to the chosen set is scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FfCriterion {
    /// Distance to the nearest chosen center (k-center greedy).
    #[default]
    MinDistance,
    /// Sum of distances to all chosen centers.
    SumDistance,
}

/// Farthest-first traversal from a seeded random first row.
pub fn ff_fit(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Clustering, ClusterError> {
    check_k(k, x.nrows())?;
    let first = seed::rng_for(seed, Role::Init, 0).random_range(0..x.nrows());
    let mut fit = ff_fit_from(x, k, first, FfCriterion::MinDistance)?;
    fit.model.seed = seed;
    Ok(fit)
}

/// Farthest-first traversal starting at row `first`. Each further center is
/// the unchosen row with the largest score; ties go to the lowest index.
/// The trace holds the covering radius after each center is added.
pub fn ff_fit_from(
    x: ArrayView2<'_, f64>,
    k: usize,
    first: usize,
    criterion: FfCriterion,
) -> Result<Clustering, ClusterError> {
    check_matrix(x)?;
    let (n, d) = x.dim();
    check_k(k, n)?;
    if first >= n {
        return Err(ClusterError::KTooLarge { k: first + 1, n });
    }
    let owned = x.as_standard_layout();
    let rows = rows_of(owned.view());
    let mut chosen = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut min_d: Vec<f64> = rows.iter().map(|r| sq_dist(r, rows[first]).sqrt()).collect();
    let mut sum_d = min_d.clone();
    let mut trace = vec![min_d.iter().copied().fold(0.0, f64::max)];
    while chosen.len() < k {
        let score = match criterion {
            FfCriterion::MinDistance => &min_d,
            FfCriterion::SumDistance => &sum_d,
        };
        let mut best = usize::MAX;
        for i in (0..n).filter(|&i| !taken[i]) {
            if best == usize::MAX || score[i] > score[best] {
                best = i;
            }
        }
        taken[best] = true;
        chosen.push(best);
        for (i, r) in rows.iter().enumerate() {
            let dist = sq_dist(r, rows[best]).sqrt();
            min_d[i] = min_d[i].min(dist);
            sum_d[i] += dist;
        }
        trace.push(min_d.iter().copied().fold(0.0, f64::max));
    }
    let mut centers = Array2::zeros((k, d));
    for (c, &i) in chosen.iter().enumerate() {
        centers.row_mut(c).assign(&ndarray::aview1(rows[i]));
    }
    let (labels, _) = nearest_labels(&rows, centers.view());
    Ok(Clustering {
        model: ClusterModel {
            kind: ClusterKind::FarthestFirst,
            k,
            centers,
            em: None,
            canopy: None,
            seed: 0,
        },
        labels,
        objective_trace: trace,
    })
}
