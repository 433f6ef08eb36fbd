use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reptree_fit_counts, RepTree, RepTreeParams, TrainingSet, TreeError};
use crate::seed::{self, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: RepTreeParams,
    /// Features tried per split; `None` means `max(1, d/3)`.
    pub mtry: Option<usize>,
    /// Resample rows with replacement for each tree.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 10,
            tree: RepTreeParams::default(),
            mtry: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, d: usize) -> usize {
        self.mtry.unwrap_or((d / 3).max(1)).clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RepTree>,
    pub mtry: usize,
    pub seed: u64,
}

impl Forest {
    /// Unweighted mean of the tree predictions.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

/// Draws `total` instances uniformly from the multiset described by
/// `counts` and returns the new multiplicities.
pub fn bootstrap_counts<R: Rng>(counts: &[u32], rng: &mut R) -> Vec<u32> {
    let pool: Vec<u32> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i as u32, c as usize))
        .collect();
    let mut out = vec![0u32; counts.len()];
    for _ in 0..pool.len() {
        out[pool[rng.random_range(0..pool.len())] as usize] += 1;
    }
    out
}

/// Random forest over all rows of `x`.
pub fn rf_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<Forest, TreeError> {
    let data = TrainingSet::new(x, y)?;
    rf_fit_counts(&data, &vec![1; data.len()], params, seed)
}

/// Random forest over the multiset `counts` of rows. Tree `t` draws its
/// bootstrap and split features from a stream derived from `(seed, t)`.
pub fn rf_fit_counts(
    data: &TrainingSet,
    counts: &[u32],
    params: &ForestParams,
    seed: u64,
) -> Result<Forest, TreeError> {
    if params.n_trees == 0 {
        return Err(TreeError::BadParams("n_trees must be at least 1".into()));
    }
    params.tree.validate()?;
    let total: usize = counts.iter().map(|&c| c as usize).sum();
    let needed = 2 * params.tree.min_leaf;
    if total < needed {
        return Err(TreeError::TooFewRows { needed, got: total });
    }
    let mtry = params.mtry_for(data.n_features());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng_for(seed, Role::Tree, t as u64);
            let sample = if params.bootstrap {
                bootstrap_counts(counts, &mut rng)
            } else {
                counts.to_vec()
            };
            reptree_fit_counts(data, &sample, &params.tree, mtry, &mut rng).or_else(|e| match e {
                // a degenerate bootstrap can fall below the size floor
                TreeError::TooFewRows { .. } => {
                    reptree_fit_counts(data, counts, &params.tree, mtry, &mut rng)
                }
                e => Err(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Forest { trees, mtry, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::reptree_fit;
    use ndarray::Array2;

    #[test]
    fn single_tree_without_bootstrap_matches_reptree() {
        let mut rng = seed::rng(1);
        let x = Array2::from_shape_simple_fn((120, 3), || rng.random::<f64>());
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] + 2.0 * r[2]).collect();
        let p = ForestParams {
            n_trees: 1,
            mtry: Some(3),
            bootstrap: false,
            ..ForestParams::default()
        };
        let f = rf_fit(x.view(), &y, &p, 5).unwrap();
        let data = TrainingSet::new(x.view(), &y).unwrap();
        let mut trng = seed::rng_for(5, Role::Tree, 0);
        let t = reptree_fit_counts(&data, &vec![1; 120], &p.tree, 3, &mut trng).unwrap();
        assert_eq!(f.trees[0], t);
        let t2 = reptree_fit(x.view(), &y, &p.tree, seed::derive(5, Role::Tree, 0)).unwrap();
        assert_eq!(f.trees[0], t2);
    }

    #[test]
    fn constant_target() {
        let x = Array2::from_shape_fn((30, 2), |(i, j)| (i + j) as f64);
        let f = rf_fit(x.view(), &[7.0; 30], &ForestParams::default(), 0).unwrap();
        assert_eq!(f.predict(&[3.0, 1.0]), 7.0);
        assert_eq!(f.mtry, 1);
    }

    #[test]
    fn mean_of_trees() {
        let mut rng = seed::rng(2);
        let x = Array2::from_shape_simple_fn((80, 2), || rng.random::<f64>());
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] * r[1]).collect();
        let f = rf_fit(x.view(), &y, &ForestParams::default(), 3).unwrap();
        let q = [0.3, 0.6];
        let brute = f.trees.iter().map(|t| t.predict(&q)).sum::<f64>() / 10.0;
        assert_eq!(f.predict(&q), brute);
        let mut rev = f.clone();
        rev.trees.reverse();
        assert!((rev.predict(&q) - brute).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_preserves_total() {
        let counts = vec![0, 3, 1, 0, 2];
        let b = bootstrap_counts(&counts, &mut seed::rng(4));
        assert_eq!(b.iter().sum::<u32>(), 6);
        assert_eq!(b[0] + b[3], 0);
    }
}
