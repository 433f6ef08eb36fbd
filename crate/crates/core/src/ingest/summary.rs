use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError};

/// Moments of one column. Skewness and kurtosis are `None` for constant
/// columns. Kurtosis is non-excess (3 for a normal distribution).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

/// Column statistics of one data block, plus their average across columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub columns: Vec<ColumnStats>,
}

/// Coefficient of variation (population std / mean) of each averaged
/// statistic across blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsVariation {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

fn column_stats(values: impl Iterator<Item = f64> + Clone, n: usize) -> ColumnStats {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let ss = m2;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 1e-24 * (1.0 + mean * mean) {
        return ColumnStats {
            mean,
            std: 0.0,
            skewness: None,
            kurtosis: None,
        };
    }
    ColumnStats {
        mean,
        std: (ss / (nf - 1.0)).sqrt(),
        skewness: Some(m3 / m2.powf(1.5)),
        kurtosis: Some(m4 / (m2 * m2)),
    }
}

fn average(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = vals.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

pub fn summarize_columns(x: ArrayView2<'_, f64>) -> Result<DatasetStats, IngestError> {
    let n = x.nrows();
    if n < 4 {
        return Err(IngestError::TooFewRows { needed: 4, got: n });
    }
    let columns: Vec<ColumnStats> = x
        .columns()
        .into_iter()
        .map(|c| column_stats(c.iter().copied(), n))
        .collect();
    let d = columns.len() as f64;
    Ok(DatasetStats {
        mean: columns.iter().map(|c| c.mean).sum::<f64>() / d,
        std: columns.iter().map(|c| c.std).sum::<f64>() / d,
        skewness: average(columns.iter().map(|c| c.skewness)),
        kurtosis: average(columns.iter().map(|c| c.kurtosis)),
        columns,
    })
}

/// Per-column moments of the feature matrix, averaged across columns.
pub fn summarize(ds: &Dataset) -> Result<DatasetStats, IngestError> {
    summarize_columns(ds.features.view())
}

fn cov(vals: &[f64]) -> f64 {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Variation of the averaged statistics across blocks (e.g. year and
/// quarters). Undefined skewness/kurtosis entries are skipped.
pub fn coefficient_of_variation(blocks: &[DatasetStats]) -> StatsVariation {
    let pick = |f: fn(&DatasetStats) -> Option<f64>| -> Vec<f64> {
        blocks.iter().filter_map(f).collect()
    };
    StatsVariation {
        mean: cov(&pick(|b| Some(b.mean))),
        std: cov(&pick(|b| Some(b.std))),
        skewness: cov(&pick(|b| b.skewness)),
        kurtosis: cov(&pick(|b| b.kurtosis)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn standard_normal_sample_moments() {
        let mut rng = crate::seed::rng(2024);
        let x = Array2::from_shape_simple_fn((100_000, 1), || rng.sample::<f64, _>(StandardNormal));
        let s = summarize_columns(x.view()).unwrap();
        assert!(s.mean.abs() < 0.02);
        assert!((s.std - 1.0).abs() < 0.02);
        assert!(s.skewness.unwrap().abs() < 0.05);
        assert!((s.kurtosis.unwrap() - 3.0).abs() < 0.1);
    }

    #[test]
    fn constant_column_undefined_shape() {
        let s = summarize_columns(array![[2.0], [2.0], [2.0], [2.0]].view()).unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.skewness, None);
        assert_eq!(s.kurtosis, None);
    }

    #[test]
    fn three_rows_rejected() {
        assert!(matches!(
            summarize_columns(array![[1.0], [2.0], [3.0]].view()),
            Err(IngestError::TooFewRows { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn variation_matches_published_block_table() {
        // yearly and quarterly averaged statistics of a real wind-farm year
        let rows = [
            (0.9983, 4.9493, 100.7258),
            (0.8981, 3.9305, 87.7615),
            (0.8729, 5.4827, 129.5278),
            (0.8421, 5.4604, 118.6208),
            (0.8873, 4.7543, 113.6719),
        ];
        let blocks: Vec<DatasetStats> = rows
            .iter()
            .map(|&(std, skew, kurt)| DatasetStats {
                mean: 0.1,
                std,
                skewness: Some(skew),
                kurtosis: Some(kurt),
                columns: vec![],
            })
            .collect();
        let v = coefficient_of_variation(&blocks);
        assert!((v.std - 0.0586).abs() < 5e-5, "{}", v.std);
        assert!((v.skewness - 0.1157).abs() < 5e-5, "{}", v.skewness);
        assert!((v.kurtosis - 0.1316).abs() < 5e-5, "{}", v.kurtosis);
    }
}
