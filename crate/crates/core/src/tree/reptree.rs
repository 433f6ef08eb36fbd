use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{TrainingSet, TreeError};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepTreeParams {
    /// Minimum training instances (with multiplicity) per leaf.
    pub min_leaf: usize,
    /// Depth cap; 0 means unlimited.
    pub max_depth: usize,
    /// Rows are split into this many folds; one is held out for pruning.
    pub prune_folds: usize,
    /// A node whose target variance is at most this fraction of the root
    /// variance becomes a leaf.
    pub min_variance_prop: f64,
    pub prune: bool,
}

impl Default for RepTreeParams {
    fn default() -> Self {
        Self {
            min_leaf: 2,
            max_depth: 0,
            prune_folds: 3,
            min_variance_prop: 1e-3,
            prune: true,
        }
    }
}

impl RepTreeParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.min_leaf == 0 {
            return Err(TreeError::BadParams("min_leaf must be at least 1".into()));
        }
        if self.prune && self.prune_folds < 2 {
            return Err(TreeError::BadParams("prune_folds must be at least 2".into()));
        }
        if !(self.min_variance_prop >= 0.0) {
            return Err(TreeError::BadParams("min_variance_prop must be >= 0".into()));
        }
        Ok(())
    }
}

/// Arena node. Leaves have `feature == None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Mean grow-set target of the rows reaching this node.
    pub value: f64,
    /// Grow-set instances reaching this node.
    pub count: f64,
}

impl Node {
    fn leaf(value: f64, count: f64) -> Self {
        Self {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
            count,
        }
    }
}

/// A regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepTree {
    pub nodes: Vec<Node>,
}

impl RepTree {
    /// Routes `x` down the tree (left iff `x[feature] <= threshold`).
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_of(x)].value
    }

    /// Index of the leaf reached by `x`.
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Some(f) = self.nodes[i].feature {
            i = if x[f] <= self.nodes[i].threshold {
                self.nodes[i].left
            } else {
                self.nodes[i].right
            };
        }
        i
    }

    pub fn predict_all(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RepTree, i: usize) -> usize {
            match t.nodes[i].feature {
                None => 0,
                Some(_) => 1 + go(t, t.nodes[i].left).max(go(t, t.nodes[i].right)),
            }
        }
        go(self, 0)
    }
}

/// Fits one tree on all rows of `x`.
pub fn reptree_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    params: &RepTreeParams,
    seed: u64,
) -> Result<RepTree, TreeError> {
    let data = TrainingSet::new(x, y)?;
    let counts = vec![1u32; data.len()];
    let mut rng = seed::rng(seed);
    reptree_fit_counts(&data, &counts, params, data.n_features(), &mut rng)
}

/// Fits one tree on rows weighted by integer multiplicities, sampling
/// `mtry` candidate features per split.
///
/// Distinct rows are shuffled into `prune_folds` folds: fold 0 is the
/// pruning set, the rest grow the tree. With pruning disabled, or too few
/// distinct rows to fill every fold, all rows grow the tree.
pub fn reptree_fit_counts(
    data: &TrainingSet,
    counts: &[u32],
    params: &RepTreeParams,
    mtry: usize,
    rng: &mut Rng,
) -> Result<RepTree, TreeError> {
    params.validate()?;
    if counts.len() != data.len() {
        return Err(TreeError::LengthMismatch {
            rows: data.len(),
            targets: counts.len(),
        });
    }
    if !(1..=data.n_features()).contains(&mtry) {
        return Err(TreeError::BadParams(format!("mtry {mtry} outside 1..={}", data.d)));
    }
    let total: usize = counts.iter().map(|&c| c as usize).sum();
    if total < 2 * params.min_leaf {
        return Err(TreeError::TooFewRows {
            needed: 2 * params.min_leaf,
            got: total,
        });
    }
    let mut present: Vec<u32> = (0..data.len() as u32).filter(|&i| counts[i as usize] > 0).collect();
    if !params.prune || present.len() < params.prune_folds {
        return Ok(grow_tree(data, counts, params, mtry, rng));
    }
    present.shuffle(rng);
    let mut grow = vec![0u32; counts.len()];
    let mut hold = vec![0u32; counts.len()];
    for (pos, &i) in present.iter().enumerate() {
        let i = i as usize;
        if pos % params.prune_folds == 0 {
            hold[i] = counts[i];
        } else {
            grow[i] = counts[i];
        }
    }
    let grown = grow_tree(data, &grow, params, mtry, rng);
    Ok(prune(&grown, data, &hold))
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows an unpruned tree by weighted variance reduction.
pub fn grow_tree(
    data: &TrainingSet,
    counts: &[u32],
    params: &RepTreeParams,
    mtry: usize,
    rng: &mut Rng,
) -> RepTree {
    let d = data.d;
    // per-feature sorted lists of the rows in use; a node owns the same
    // range in every list
    let mut lists: Vec<Vec<u32>> = data
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&i| counts[i as usize] > 0).collect())
        .collect();
    let m = lists[0].len();
    let w = |i: u32| counts[i as usize] as f64;

    let stats = |rows: &[u32]| {
        let (mut sw, mut sy, mut syy) = (0.0, 0.0, 0.0);
        for &i in rows {
            let (wi, yi) = (w(i), data.y[i as usize]);
            sw += wi;
            sy += wi * yi;
            syy += wi * yi * yi;
        }
        (sw, sy, syy)
    };
    let (sw0, sy0, syy0) = stats(&lists[0]);
    let root_var = ((syy0 - sy0 * sy0 / sw0) / sw0).max(0.0);

    let mut nodes = vec![Node::leaf(sy0 / sw0, sw0)];
    let mut goes_left = vec![false; data.len()];
    let mut buf: Vec<u32> = Vec::with_capacity(m);
    let mut features: Vec<usize> = (0..d).collect();
    // (node index, lo, hi, depth)
    let mut stack = vec![(0usize, 0usize, m, 0usize)];
    while let Some((node, lo, hi, depth)) = stack.pop() {
        let (sw, sy, syy) = stats(&lists[0][lo..hi]);
        let sse = (syy - sy * sy / sw).max(0.0);
        if sw < 2.0 * params.min_leaf as f64
            || sse / sw <= params.min_variance_prop * root_var
            || (params.max_depth > 0 && depth >= params.max_depth)
        {
            continue;
        }
        let candidates: &[usize] = if mtry < d {
            features.shuffle(rng);
            let c = &mut features[..mtry];
            c.sort_unstable();
            c
        } else {
            &features
        };
        let mut best: Option<Best> = None;
        for &f in candidates {
            let rows = &lists[f][lo..hi];
            let (mut lw, mut ly, mut lyy) = (0.0, 0.0, 0.0);
            for p in 0..rows.len() - 1 {
                let i = rows[p];
                let (wi, yi) = (w(i), data.y[i as usize]);
                lw += wi;
                ly += wi * yi;
                lyy += wi * yi * yi;
                let (a, b) = (data.value(i as usize, f), data.value(rows[p + 1] as usize, f));
                if a >= b || lw < params.min_leaf as f64 || sw - lw < params.min_leaf as f64 {
                    continue;
                }
                let rw = sw - lw;
                let (ry, ryy) = (sy - ly, syy - lyy);
                let child = (lyy - ly * ly / lw) + (ryy - ry * ry / rw);
                let gain = sse - child;
                if gain > 1e-12 * sse.max(1e-300) && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut t = 0.5 * (a + b);
                    if t >= b {
                        t = a;
                    }
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold: t,
                    });
                }
            }
        }
        let Some(best) = best else { continue };

        for &i in &lists[best.feature][lo..hi] {
            goes_left[i as usize] = data.value(i as usize, best.feature) <= best.threshold;
        }
        let mut mid = lo;
        for list in lists.iter_mut() {
            buf.clear();
            let seg = &mut list[lo..hi];
            let mut l = 0;
            for p in 0..seg.len() {
                let i = seg[p];
                if goes_left[i as usize] {
                    seg[l] = i;
                    l += 1;
                } else {
                    buf.push(i);
                }
            }
            seg[l..].copy_from_slice(&buf);
            mid = lo + l;
        }
        let (lsw, lsy, _) = stats(&lists[0][lo..mid]);
        let (rsw, rsy, _) = stats(&lists[0][mid..hi]);
        let left = nodes.len();
        nodes.push(Node::leaf(lsy / lsw, lsw));
        nodes.push(Node::leaf(rsy / rsw, rsw));
        let n = &mut nodes[node];
        n.feature = Some(best.feature);
        n.threshold = best.threshold;
        n.left = left;
        n.right = left + 1;
        stack.push((left + 1, mid, hi, depth + 1));
        stack.push((left, lo, mid, depth + 1));
    }
    RepTree { nodes }
}

/// Reduced-error pruning: bottom-up, a subtree is replaced by a leaf when
/// the leaf's squared error on the held-out rows does not exceed the
/// subtree's.
pub fn prune(tree: &RepTree, data: &TrainingSet, holdout: &[u32]) -> RepTree {
    let k = tree.nodes.len();
    // held-out squared error if each node were a leaf
    let mut leaf_err = vec![0.0; k];
    for (i, &c) in holdout.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let (x, y) = (data.row(i), data.y[i]);
        let mut n = 0;
        loop {
            leaf_err[n] += c as f64 * (y - tree.nodes[n].value).powi(2);
            match tree.nodes[n].feature {
                None => break,
                Some(f) => {
                    n = if x[f] <= tree.nodes[n].threshold {
                        tree.nodes[n].left
                    } else {
                        tree.nodes[n].right
                    }
                }
            }
        }
    }
    let mut collapsed = vec![false; k];
    fn visit(t: &RepTree, i: usize, leaf_err: &[f64], collapsed: &mut [bool]) -> f64 {
        match t.nodes[i].feature {
            None => leaf_err[i],
            Some(_) => {
                let sub = visit(t, t.nodes[i].left, leaf_err, collapsed)
                    + visit(t, t.nodes[i].right, leaf_err, collapsed);
                if leaf_err[i] <= sub {
                    collapsed[i] = true;
                    leaf_err[i]
                } else {
                    sub
                }
            }
        }
    }
    visit(tree, 0, &leaf_err, &mut collapsed);

    let mut out = RepTree { nodes: Vec::new() };
    fn copy(t: &RepTree, i: usize, collapsed: &[bool], out: &mut RepTree) -> usize {
        let n = &t.nodes[i];
        let at = out.nodes.len();
        out.nodes.push(Node::leaf(n.value, n.count));
        if n.feature.is_some() && !collapsed[i] {
            let l = copy(t, n.left, collapsed, out);
            let r = copy(t, n.right, collapsed, out);
            let m = &mut out.nodes[at];
            m.feature = n.feature;
            m.threshold = n.threshold;
            m.left = l;
            m.right = r;
        }
        at
    }
    copy(tree, 0, &collapsed, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};
    use rand::Rng as _;

    fn no_prune(min_leaf: usize) -> RepTreeParams {
        RepTreeParams {
            min_leaf,
            prune: false,
            ..RepTreeParams::default()
        }
    }

    #[test]
    fn constant_target_is_one_leaf() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i * (j + 1)) as f64);
        let t = reptree_fit(x.view(), &[3.5; 20], &RepTreeParams::default(), 1).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[100.0, -4.0]), 3.5);
    }

    #[test]
    fn step_function_split() {
        let xs = [-2.0, -1.5, -0.25, 0.0, 0.5, 1.0, 3.0];
        let x = Array2::from_shape_vec((7, 1), xs.to_vec()).unwrap();
        let y: Vec<f64> = xs.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
        let t = reptree_fit(x.view(), &y, &no_prune(1), 0).unwrap();
        let root = &t.nodes[0];
        assert_eq!(root.feature, Some(0));
        assert!(root.threshold >= 0.0 && root.threshold < 0.5);
        assert_eq!(t.nodes[root.left].value, 0.0);
        assert_eq!(t.nodes[root.right].value, 1.0);
        assert_eq!(t.predict(&[-1.0]), 0.0);
        assert_eq!(t.predict(&[1.0]), 1.0);
        assert_eq!(t.predict(&[root.threshold]), 0.0);
    }

    #[test]
    fn leaves_respect_min_leaf_and_depth() {
        let mut rng = seed::rng(3);
        let x = Array2::from_shape_simple_fn((300, 3), || rng.random::<f64>());
        let y: Vec<f64> = x.rows().into_iter().map(|r| r[0] * 3.0 + r[1].sin()).collect();
        let p = RepTreeParams {
            min_leaf: 5,
            max_depth: 4,
            prune: false,
            ..RepTreeParams::default()
        };
        let t = reptree_fit(x.view(), &y, &p, 2).unwrap();
        assert!(t.depth() <= 4);
        assert!(t.nodes.iter().filter(|n| n.feature.is_none()).all(|n| n.count >= 5.0));
    }

    #[test]
    fn too_few_rows() {
        let x = Array2::<f64>::zeros((3, 1));
        assert!(matches!(
            reptree_fit(x.view(), &[0.0; 3], &RepTreeParams::default(), 0),
            Err(TreeError::TooFewRows { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn pruning_never_hurts_holdout_error() {
        for s in 0..5 {
            let mut rng = seed::rng(50 + s);
            let x = Array2::from_shape_simple_fn((400, 2), || rng.random::<f64>());
            let y: Array1<f64> = Array1::from_shape_simple_fn(400, || rng.random::<f64>());
            let data = TrainingSet::new(x.view(), y.as_slice().unwrap()).unwrap();
            let grow: Vec<u32> = (0..400).map(|i| (i % 3 != 0) as u32).collect();
            let hold: Vec<u32> = grow.iter().map(|&g| 1 - g).collect();
            let full = grow_tree(&data, &grow, &no_prune(2), 2, &mut seed::rng(s));
            let pruned = prune(&full, &data, &hold);
            let err = |t: &RepTree| -> f64 {
                (0..400)
                    .filter(|&i| hold[i] == 1)
                    .map(|i| (t.predict(data.row(i)) - y[i]).powi(2))
                    .sum()
            };
            assert!(err(&pruned) <= err(&full) + 1e-9);
            assert!(pruned.n_leaves() < full.n_leaves());
        }
    }

    #[test]
    fn leaf_values_are_grow_means() {
        let mut rng = seed::rng(9);
        let x = Array2::from_shape_simple_fn((200, 2), || rng.random::<f64>());
        let y: Vec<f64> = x.rows().into_iter().map(|r| (4.0 * r[0]).floor() + r[1]).collect();
        let data = TrainingSet::new(x.view(), &y).unwrap();
        let counts: Vec<u32> = (0..200).map(|i| (i % 4) as u32).collect();
        let t = grow_tree(&data, &counts, &no_prune(2), 2, &mut seed::rng(0));
        let mut sums = vec![(0.0, 0.0); t.nodes.len()];
        for i in 0..200 {
            let leaf = t.leaf_of(data.row(i));
            sums[leaf].0 += counts[i] as f64 * y[i];
            sums[leaf].1 += counts[i] as f64;
        }
        for (i, n) in t.nodes.iter().enumerate() {
            if n.feature.is_none() && sums[i].1 > 0.0 {
                assert!((n.value - sums[i].0 / sums[i].1).abs() < 1e-9);
            }
        }
    }
}
