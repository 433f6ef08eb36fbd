use serde::{Deserialize, Serialize};

use super::StatsError;

/// Normalized error summary for one prediction run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmae: f64,
    pub nrmse: f64,
    pub n: usize,
    /// Mean observed power, kW.
    pub mean_observation: f64,
}

fn check(pred: &[f64], obs: &[f64]) -> Result<f64, StatsError> {
    if pred.len() != obs.len() {
        return Err(StatsError::LengthMismatch {
            pred: pred.len(),
            obs: obs.len(),
        });
    }
    if obs.is_empty() {
        return Err(StatsError::Empty);
    }
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    if !mean.is_finite() {
        return Err(StatsError::NonFinite);
    }
    if mean.abs() <= 1e-9 {
        return Err(StatsError::DegenerateMean(mean));
    }
    Ok(mean)
}

/// Mean absolute error divided by the mean observation.
pub fn nmae(pred: &[f64], obs: &[f64]) -> Result<f64, StatsError> {
    let mean = check(pred, obs)?;
    let mae = pred.iter().zip(obs).map(|(p, o)| (p - o).abs()).sum::<f64>() / obs.len() as f64;
    Ok(mae / mean)
}

/// Root-mean-square error divided by the mean observation.
pub fn nrmse(pred: &[f64], obs: &[f64]) -> Result<f64, StatsError> {
    let mean = check(pred, obs)?;
    let mse = pred.iter().zip(obs).map(|(p, o)| (p - o).powi(2)).sum::<f64>() / obs.len() as f64;
    Ok(mse.sqrt() / mean)
}

pub fn metric_report(pred: &[f64], obs: &[f64]) -> Result<MetricReport, StatsError> {
    Ok(MetricReport {
        nmae: nmae(pred, obs)?,
        nrmse: nrmse(pred, obs)?,
        n: obs.len(),
        mean_observation: check(pred, obs)?,
    })
}

/// Fractional reduction of `metric` relative to `reference`:
/// `(reference - metric) / reference`.
pub fn relative_reduction(metric: f64, reference: f64) -> f64 {
    (reference - metric) / reference
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_cases() {
        assert_eq!(nmae(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(nmae(&[2.0, 4.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert_eq!(nrmse(&[2.0, 4.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert_eq!(nrmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(
            nmae(&[1.0, 1.0], &[1.0, -1.0]),
            Err(StatsError::DegenerateMean(_))
        ));
        assert!(matches!(
            nrmse(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!((relative_reduction(0.8, 1.0) - 0.2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn scale_equivariant(
            pairs in prop::collection::vec((0.0f64..100.0, 1.0f64..100.0), 1..50),
            c in 0.01f64..100.0,
        ) {
            let (pred, obs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let sp: Vec<f64> = pred.iter().map(|v| v * c).collect();
            let so: Vec<f64> = obs.iter().map(|v| v * c).collect();
            let a = nmae(&pred, &obs).unwrap();
            let b = nmae(&sp, &so).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
            let a = nrmse(&pred, &obs).unwrap();
            let b = nrmse(&sp, &so).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }

        #[test]
        fn nmae_at_most_nrmse_for_positive_mean(
            pairs in prop::collection::vec((-50.0f64..100.0, 0.5f64..100.0), 1..50),
        ) {
            let (pred, obs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = metric_report(&pred, &obs).unwrap();
            prop_assert!(r.nmae >= 0.0);
            prop_assert!(r.nmae <= r.nrmse * (1.0 + 1e-12));
            prop_assert_eq!(nrmse(&obs, &obs).unwrap(), 0.0);
        }
    }
}
