use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_k, check_matrix, kmeans_fit, nearest_labels, rows_of, sq_dist, CanopyExtras,
    ClusterError, ClusterKind, ClusterModel, Clustering, KMeansParams,
};
use crate::seed::{self, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanopyParams {
    /// Loose threshold as a multiple of the tight one.
    pub t1_ratio: f64,
    /// Threshold search rounds.
    pub rounds: usize,
}

impl Default for CanopyParams {
    fn default() -> Self {
        Self {
            t1_ratio: 1.25,
            rounds: 20,
        }
    }
}

/// Initial `(T1, T2)` from attribute standard deviations: `T2` is half the
/// root of the summed column variances.
pub fn canopy_thresholds(x: ArrayView2<'_, f64>, t1_ratio: f64) -> (f64, f64) {
    let n = x.nrows() as f64;
    let total_var: f64 = x
        .columns()
        .into_iter()
        .map(|c| {
            let m = c.sum() / n;
            c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        })
        .sum();
    let t2 = (0.5 * total_var.sqrt()).max(1e-9);
    (t1_ratio * t2, t2)
}

struct Canopy {
    members: Vec<usize>,
    center: Vec<f64>,
}

fn mean_of(rows: &[&[f64]], members: &[usize], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for &i in members {
        for (a, v) in m.iter_mut().zip(rows[i]) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= members.len() as f64);
    m
}

/// One canopy pass: pick a random remaining row, gather every row within
/// `t1` as members, drop rows within `t2` from the candidate list.
fn build(rows: &[&[f64]], d: usize, t1: f64, t2: f64, seed: u64) -> Vec<Canopy> {
    let mut rng = seed::rng_for(seed, Role::Init, 1);
    let (t1s, t2s) = (t1 * t1, t2 * t2);
    let mut remaining: Vec<usize> = (0..rows.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let c = remaining[rng.random_range(0..remaining.len())];
        let members: Vec<usize> = (0..rows.len())
            .filter(|&i| sq_dist(rows[i], rows[c]) < t1s)
            .collect();
        remaining.retain(|&i| sq_dist(rows[i], rows[c]) >= t2s);
        out.push(Canopy {
            center: mean_of(rows, &members, d),
            members,
        });
    }
    out
}

/// Canopy clustering forced to `k_target` canopies.
///
/// The tight threshold is scaled by bisection until the canopy count hits
/// the target or the search is exhausted. Surplus canopies are then merged
/// nearest-pair first and missing ones produced by 2-means splits of the
/// most populous canopy. If the count still differs, `Unreachable` carries
/// the achieved model.
pub fn canopy_fit(
    x: ArrayView2<'_, f64>,
    k_target: usize,
    seed: u64,
    params: &CanopyParams,
) -> Result<Clustering, ClusterError> {
    check_matrix(x)?;
    let (n, d) = x.dim();
    check_k(k_target, n)?;
    let owned = x.as_standard_layout();
    let rows = rows_of(owned.view());
    let (_, t2_0) = canopy_thresholds(x, params.t1_ratio);
    let ratio = params.t1_ratio;

    let mut trace = Vec::new();
    let mut run = |scale: f64| {
        let c = build(&rows, d, ratio * t2_0 * scale, t2_0 * scale, seed);
        trace.push(c.len() as f64);
        c
    };
    let mut scale = 1.0;
    let mut best = (scale, run(scale));
    let better = |count: usize, best: usize| {
        let (a, b) = (count.abs_diff(k_target), best.abs_diff(k_target));
        a < b || (a == b && count > k_target && best < k_target)
    };
    if best.1.len() != k_target {
        // bracket the target in scale, then bisect geometrically
        let (mut lo, mut hi) = (None, None);
        let first_count = best.1.len();
        for _ in 0..params.rounds {
            if first_count > k_target {
                scale *= 2.0;
            } else {
                scale *= 0.5;
            }
            let c = run(scale);
            let count = c.len();
            if better(count, best.1.len()) {
                best = (scale, c);
            }
            if (first_count > k_target) == (count > k_target) && count != k_target {
                continue;
            }
            if first_count > k_target {
                lo = Some(scale / 2.0);
                hi = Some(scale);
            } else {
                lo = Some(scale);
                hi = Some(scale * 2.0);
            }
            break;
        }
        if let (Some(mut lo), Some(mut hi)) = (lo, hi) {
            for _ in 0..params.rounds {
                if best.1.len() == k_target {
                    break;
                }
                let mid = (lo * hi).sqrt();
                let c = run(mid);
                let count = c.len();
                if count > k_target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if better(count, best.1.len()) {
                    best = (mid, c);
                }
            }
        }
    }
    let (scale, mut canopies) = best;

    while canopies.len() > k_target {
        let (a, b) = nearest_pair(&canopies);
        let cb = canopies.remove(b);
        let ca = &mut canopies[a];
        ca.members.extend(cb.members);
        ca.members.sort_unstable();
        ca.members.dedup();
        ca.center = mean_of(&rows, &ca.members, d);
    }
    let mut split_round = 0;
    while canopies.len() < k_target {
        let (big, _) = canopies
            .iter()
            .enumerate()
            .fold((0, 0), |b, (i, c)| if c.members.len() > b.1 { (i, c.members.len()) } else { b });
        let members = canopies[big].members.clone();
        let distinct = members.iter().any(|&i| rows[i] != rows[members[0]]);
        if members.len() < 2 || !distinct {
            break;
        }
        let sub = x.select(ndarray::Axis(0), &members);
        let fit = kmeans_fit(
            sub.view(),
            2,
            seed::derive(seed, Role::Split, split_round),
            &KMeansParams::default(),
        )?;
        split_round += 1;
        let parts: Vec<Vec<usize>> = (0..2)
            .map(|p| {
                members
                    .iter()
                    .zip(&fit.labels)
                    .filter(|(_, &l)| l == p)
                    .map(|(&i, _)| i)
                    .collect()
            })
            .collect();
        if parts.iter().any(Vec::is_empty) {
            break;
        }
        canopies.remove(big);
        for p in parts {
            canopies.push(Canopy {
                center: mean_of(&rows, &p, d),
                members: p,
            });
        }
    }

    let k = canopies.len();
    let mut centers = Array2::zeros((k, d));
    for (j, c) in canopies.iter().enumerate() {
        centers.row_mut(j).assign(&ndarray::aview1(&c.center));
    }
    let (labels, _) = nearest_labels(&rows, centers.view());
    let clustering = Clustering {
        model: ClusterModel {
            kind: ClusterKind::Canopy,
            k,
            centers,
            em: None,
            canopy: Some(CanopyExtras {
                t1: ratio * t2_0 * scale,
                t2: t2_0 * scale,
            }),
            seed,
        },
        labels,
        objective_trace: trace,
    };
    if k != k_target {
        return Err(ClusterError::Unreachable {
            target: k_target,
            achieved: Box::new(clustering),
        });
    }
    Ok(clustering)
}

fn nearest_pair(c: &[Canopy]) -> (usize, usize) {
    let mut best = (0, 1, f64::INFINITY);
    for a in 0..c.len() {
        for b in a + 1..c.len() {
            let dd = sq_dist(&c[a].center, &c[b].center);
            if dd < best.2 {
                best = (a, b, dd);
            }
        }
    }
    (best.0, best.1)
}
