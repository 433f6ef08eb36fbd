use chrono::Datelike;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError};
use crate::seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// First rows train, last rows test.
    #[default]
    Chronological,
    /// Rows permuted by seed before partitioning.
    Shuffled,
}

/// Train/test index partition. Each side is sorted ascending.
pub fn split_indices(
    n: usize,
    train_frac: f64,
    mode: SplitMode,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), IngestError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(IngestError::BadFraction(train_frac));
    }
    if n < 10 {
        return Err(IngestError::TooFewRows { needed: 10, got: n });
    }
    let n_train = ((train_frac * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    if mode == SplitMode::Shuffled {
        order.shuffle(&mut seed::rng_for(seed, seed::Role::Split, 0));
    }
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(
    ds: &Dataset,
    train_frac: f64,
    mode: SplitMode,
    seed: u64,
) -> Result<(Dataset, Dataset), IngestError> {
    let (train, test) = split_indices(ds.len(), train_frac, mode, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}

/// Balanced fold assignment: returns `k` sorted index lists whose sizes differ
/// by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, IngestError> {
    if k < 2 || k > n {
        return Err(IngestError::BadFoldCount { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng_for(seed, seed::Role::Fold, 0));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Calendar-quarter partition. Empty quarters are `None`.
#[derive(Debug, Clone)]
pub struct Quarters {
    pub year: i32,
    pub parts: [Option<Dataset>; 4],
}

impl Quarters {
    /// Quarter numbers (1-based) without rows.
    pub fn empty_quarters(&self) -> Vec<usize> {
        (0..4).filter(|&q| self.parts[q].is_none()).map(|q| q + 1).collect()
    }
}

pub fn quarter_split(ds: &Dataset) -> Result<Quarters, IngestError> {
    if ds.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let first = ds.timestamps.iter().map(|t| t.year()).min().unwrap_or(0);
    let last = ds.timestamps.iter().map(|t| t.year()).max().unwrap_or(0);
    if first != last {
        return Err(IngestError::MultiYearSpan { first, last });
    }
    let mut idx: [Vec<usize>; 4] = Default::default();
    for (i, t) in ds.timestamps.iter().enumerate() {
        idx[(t.month0() / 3) as usize].push(i);
    }
    let parts = idx.map(|rows| (!rows.is_empty()).then(|| ds.select(&rows)));
    Ok(Quarters { year: first, parts })
}
