use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_k, check_matrix, nearest_labels, rows_of, sq_dist, ClusterError, ClusterKind,
    ClusterModel, Clustering,
};
use crate::seed::{self, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Stop once no center moves further than this.
    pub tol: f64,
    /// Independent k-means++ starts; the lowest SSE wins.
    pub n_restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            n_restarts: 1,
        }
    }
}

/// Lloyd's algorithm from k-means++ starts, best of `n_restarts`.
pub fn kmeans_fit(
    x: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<Clustering, ClusterError> {
    check_matrix(x)?;
    check_k(k, x.nrows())?;
    let owned = x.as_standard_layout();
    let rows = rows_of(owned.view());
    let mut best: Option<Clustering> = None;
    for r in 0..params.n_restarts.max(1) {
        let mut rng = seed::rng_for(seed, Role::Restart, r as u64);
        let init = plus_plus(&rows, x.ncols(), k, &mut rng);
        let fit = lloyd(&rows, init, params, seed);
        let better = match &best {
            None => true,
            Some(b) => last(&fit) < last(b),
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Lloyd iterations from the given initial centers.
pub fn kmeans_from_centers(
    x: ArrayView2<'_, f64>,
    centers: Array2<f64>,
    seed: u64,
    params: &KMeansParams,
) -> Result<Clustering, ClusterError> {
    check_matrix(x)?;
    check_matrix(centers.view())?;
    check_k(centers.nrows(), x.nrows())?;
    if centers.ncols() != x.ncols() {
        return Err(ClusterError::DimensionMismatch {
            expected: x.ncols(),
            got: centers.ncols(),
        });
    }
    let owned = x.as_standard_layout();
    Ok(lloyd(&rows_of(owned.view()), centers, params, seed))
}

fn last(c: &Clustering) -> f64 {
    *c.objective_trace.last().expect("non-empty trace")
}

fn plus_plus<R: Rng>(rows: &[&[f64]], d: usize, k: usize, rng: &mut R) -> Array2<f64> {
    let n = rows.len();
    let mut centers = Array2::zeros((k, d));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&ndarray::aview1(rows[first]));
    let mut dist: Vec<f64> = rows.iter().map(|r| sq_dist(r, rows[first])).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            // rounding may leave `u` past the end; fall back to the last positive weight
            if dist[chosen] == 0.0 {
                chosen = dist.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&ndarray::aview1(rows[pick]));
        for (i, r) in rows.iter().enumerate() {
            dist[i] = dist[i].min(sq_dist(r, rows[pick]));
        }
    }
    centers
}

pub(super) fn lloyd(
    rows: &[&[f64]],
    mut centers: Array2<f64>,
    params: &KMeansParams,
    seed: u64,
) -> Clustering {
    let (k, d) = centers.dim();
    let mut trace = Vec::new();
    let (mut labels, mut sse) = nearest_labels(rows, centers.view());
    trace.push(sse);
    for _ in 0..params.max_iter {
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (r, &c) in rows.iter().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(r.iter()) {
                *s += v;
            }
        }
        let mut new = centers.clone();
        for c in 0..k {
            if counts[c] > 0 {
                let m = &sums.row(c) / counts[c] as f64;
                new.row_mut(c).assign(&m);
            }
        }
        // reseed empty clusters at the point farthest from its own centroid
        let mut taken = vec![false; rows.len()];
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = rows
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .map(|(i, r)| (i, sq_dist(r, new.row(labels[i]).as_slice().unwrap())))
                .fold((usize::MAX, -1.0), |b, (i, dd)| if dd > b.1 { (i, dd) } else { b });
            if far.0 != usize::MAX {
                taken[far.0] = true;
                new.row_mut(c).assign(&ndarray::aview1(rows[far.0]));
            }
        }
        let shift = centers
            .rows()
            .into_iter()
            .zip(new.rows())
            .map(|(a, b)| sq_dist(a.as_slice().unwrap(), b.as_slice().unwrap()))
            .fold(0.0, f64::max)
            .sqrt();
        centers = new;
        let (l, s) = nearest_labels(rows, centers.view());
        labels = l;
        sse = s;
        trace.push(sse);
        if shift < params.tol {
            break;
        }
    }
    Clustering {
        model: ClusterModel {
            kind: ClusterKind::KMeans,
            k,
            centers,
            em: None,
            canopy: None,
            seed,
        },
        labels,
        objective_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand_distr::StandardNormal;

    #[test]
    fn distinct_points_give_zero_sse() {
        let x = array![[0.0, 1.0], [3.0, 4.0], [-2.0, 7.0], [5.0, 5.0]];
        let fit = kmeans_fit(x.view(), 4, 3, &KMeansParams::default()).unwrap();
        assert_eq!(last(&fit), 0.0);
        let mut got: Vec<Vec<f64>> = fit.model.centers.rows().into_iter().map(|r| r.to_vec()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn two_blobs_hand_means() {
        let x = array![[0.0], [0.1], [0.2], [10.0], [10.1], [10.2]];
        let fit = kmeans_fit(x.view(), 2, 11, &KMeansParams::default()).unwrap();
        let mut c: Vec<f64> = fit.model.centers.column(0).to_vec();
        c.sort_by(f64::total_cmp);
        assert!((c[0] - 0.1).abs() < 1e-12 && (c[1] - 10.1).abs() < 1e-12);
        assert_eq!(fit.labels[0], fit.labels[2]);
        assert_ne!(fit.labels[0], fit.labels[3]);
    }

    #[test]
    fn k_too_large() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            kmeans_fit(x.view(), 3, 0, &KMeansParams::default()),
            Err(ClusterError::KTooLarge { k: 3, n: 2 })
        ));
        let bad = array![[0.0], [f64::INFINITY]];
        assert!(matches!(
            kmeans_fit(bad.view(), 1, 0, &KMeansParams::default()),
            Err(ClusterError::NonFiniteInput)
        ));
    }

    #[test]
    fn objective_non_increasing_and_deterministic() {
        for s in 0..20u64 {
            let mut rng = seed::rng(s);
            let x = Array2::from_shape_simple_fn((120, 3), || rng.sample::<f64, _>(StandardNormal));
            let p = KMeansParams { n_restarts: 2, ..Default::default() };
            let fit = kmeans_fit(x.view(), 5, s, &p).unwrap();
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            assert_eq!(fit, kmeans_fit(x.view(), 5, s, &p).unwrap());
        }
    }

    #[test]
    fn duplicates_reseed_empty_clusters() {
        let x = array![[1.0], [1.0], [1.0], [1.0], [5.0]];
        let fit = kmeans_from_centers(x.view(), array![[1.0], [1.0], [1.0]], 0, &KMeansParams::default())
            .unwrap();
        assert!(fit.model.centers.iter().all(|v| v.is_finite()));
        assert_eq!(last(&fit), 0.0);
    }
}
