use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError, WindRecord};

/// Upper clamp for turbulence intensities.
pub const INTENSITY_CAP: f64 = 10.0;
/// Denominator guard for turbulence intensities.
pub const INTENSITY_EPS: f64 = 1e-6;
pub const N_FEATURES: usize = 6;
/// Column order of the engineered feature matrix.
pub const FEATURE_NAMES: [&str; N_FEATURES] =
    ["v", "iv_turb", "sin_dir", "isin_turb", "temp", "pressure"];

/// Ratio of short-window standard deviation to mean, guarded against a
/// vanishing mean and clamped to `[0, INTENSITY_CAP]`.
pub fn turbulence_intensity(mean: f64, std: f64, eps: f64) -> f64 {
    (std / mean.abs().max(eps)).clamp(0.0, INTENSITY_CAP)
}

/// How the direction fluctuation entering the direction turbulence intensity
/// is derived from the recorded direction standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionSpread {
    /// `|sin(σ_θ)|`.
    #[default]
    SineOfStd,
    /// Delta-method standard deviation of `sin θ`: `|cos θ| · σ_θ` (radians).
    StdOfSine,
}

/// The six model inputs of one record, in matrix column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub v: f64,
    pub iv_turb: f64,
    pub sin_dir: f64,
    pub isin_turb: f64,
    pub temp: f64,
    pub pressure: f64,
}

impl FeatureVector {
    pub fn from_record(r: &WindRecord, spread: DirectionSpread) -> Self {
        let theta = r.wind_dir.to_radians();
        let sigma = r.wind_dir_std.to_radians();
        let sin_dir = theta.sin();
        let dir_fluct = match spread {
            DirectionSpread::SineOfStd => sigma.sin().abs(),
            DirectionSpread::StdOfSine => theta.cos().abs() * sigma,
        };
        Self {
            v: r.wind_speed,
            iv_turb: turbulence_intensity(r.wind_speed, r.wind_speed_std, INTENSITY_EPS),
            sin_dir,
            isin_turb: turbulence_intensity(sin_dir, dir_fluct, INTENSITY_EPS),
            temp: r.temperature,
            pressure: r.pressure,
        }
    }

    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.v,
            self.iv_turb,
            self.sin_dir,
            self.isin_turb,
            self.temp,
            self.pressure,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Option<Self> {
        match *x {
            [v, iv_turb, sin_dir, isin_turb, temp, pressure] => Some(Self {
                v,
                iv_turb,
                sin_dir,
                isin_turb,
                temp,
                pressure,
            }),
            _ => None,
        }
    }
}

/// Builds the unstandardized feature matrix with the default direction
/// spread convention.
pub fn engineer_features(records: &[WindRecord]) -> Result<Dataset, IngestError> {
    engineer_features_with(records, DirectionSpread::default())
}

pub fn engineer_features_with(
    records: &[WindRecord],
    spread: DirectionSpread,
) -> Result<Dataset, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut features = Array2::zeros((records.len(), N_FEATURES));
    for (mut row, r) in features.rows_mut().into_iter().zip(records) {
        let fv = FeatureVector::from_record(r, spread).to_array();
        row.iter_mut().zip(fv).for_each(|(dst, v)| *dst = v);
    }
    Dataset::new(
        features,
        records.iter().map(|r| r.power).collect(),
        records.iter().map(|r| r.timestamp).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn record(speed: f64, speed_std: f64, dir: f64, dir_std: f64) -> WindRecord {
        WindRecord {
            timestamp: Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap(),
            wind_speed: speed,
            wind_speed_std: speed_std,
            wind_dir: dir,
            wind_dir_std: dir_std,
            temperature: -3.0,
            pressure: 1005.0,
            power: 800.0,
        }
    }

    #[test]
    fn intensity_examples() {
        assert_abs_diff_eq!(turbulence_intensity(10.0, 1.0, 1e-6), 0.1, epsilon = 1e-15);
        assert_eq!(turbulence_intensity(10.0, 0.0, 1e-6), 0.0);
        assert_eq!(turbulence_intensity(0.0, 0.5, 1e-6), INTENSITY_CAP);
        assert_abs_diff_eq!(turbulence_intensity(-4.0, 1.0, 1e-6), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn engineered_values() {
        let ds = engineer_features(&[record(8.0, 0.8, 0.0, 3.0), record(5.0, 0.5, 90.0, 0.0)]).unwrap();
        assert_eq!(ds.column("sin_dir").unwrap()[0], 0.0);
        assert_abs_diff_eq!(ds.column("iv_turb").unwrap()[0], 0.1, epsilon = 1e-15);
        // sin(0) hits the guard, so the direction intensity saturates
        assert_eq!(ds.column("isin_turb").unwrap()[0], INTENSITY_CAP);
        assert_eq!(ds.column("sin_dir").unwrap()[1], 1.0);
        assert_eq!(ds.column("isin_turb").unwrap()[1], 0.0);
        assert_eq!(ds.targets, vec![800.0, 800.0]);
    }

    #[test]
    fn column_order_is_fixed() {
        let r = WindRecord {
            temperature: 4.5,
            pressure: 990.0,
            ..record(9.0, 0.9, 30.0, 10.0)
        };
        let ds = engineer_features(&[r]).unwrap();
        let row = ds.features.row(0);
        assert_eq!(ds.column("v").unwrap()[0], row[0]);
        assert_eq!(row[0], 9.0);
        assert_abs_diff_eq!(row[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(row[2], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(row[3], 10f64.to_radians().sin() / 0.5, epsilon = 1e-12);
        assert_eq!(row[4], 4.5);
        assert_eq!(row[5], 990.0);
        for (j, name) in FEATURE_NAMES.iter().enumerate() {
            assert_eq!(ds.column(name).unwrap()[0], row[j]);
        }
    }

    #[test]
    fn std_of_sine_mode() {
        let r = record(9.0, 0.9, 30.0, 10.0);
        let f = FeatureVector::from_record(&r, DirectionSpread::StdOfSine);
        let expected = 30f64.to_radians().cos() * 10f64.to_radians() / 0.5;
        assert_abs_diff_eq!(f.isin_turb, expected, epsilon = 1e-12);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(engineer_features(&[]), Err(IngestError::EmptyInput)));
    }

    proptest! {
        #[test]
        fn intensity_is_scale_consistent(mean in 0.1f64..50.0, ratio in 0.0f64..5.0, c in 0.01f64..100.0) {
            let std = ratio * mean;
            let a = turbulence_intensity(mean, std, INTENSITY_EPS);
            let b = turbulence_intensity(c * mean, c * std, INTENSITY_EPS);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
