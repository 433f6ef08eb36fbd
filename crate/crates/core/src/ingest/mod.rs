//! Record parsing, feature engineering, standardization and data splitting.

mod csv;
mod features;
mod split;
mod standardize;
mod summary;

use chrono::{DateTime, Utc};
use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::csv::{parse_csv, read_csv, write_csv, IngestWarning, ParsedCsv, CSV_COLUMNS};
pub use features::{
    engineer_features, engineer_features_with, turbulence_intensity, DirectionSpread,
    FeatureVector, FEATURE_NAMES, INTENSITY_CAP, INTENSITY_EPS, N_FEATURES,
};
pub use split::{
    kfold_indices, quarter_split, split_indices, split_train_test, Quarters, SplitMode,
};
pub use standardize::{apply_standardization, fit_standardization, StandardizationParams};
pub use summary::{
    coefficient_of_variation, summarize, summarize_columns, ColumnStats, DatasetStats,
    StatsVariation,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("malformed number in row {row}, column `{column}`")]
    MalformedNumber { row: usize, column: String },
    #[error("malformed timestamp in row {row}")]
    MalformedTimestamp { row: usize },
    #[error("value out of range in row {row}, column `{column}`")]
    OutOfRange { row: usize, column: String },
    #[error("no records")]
    EmptyInput,
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("schema mismatch: expected {expected} columns, got {got}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("invalid split fraction {0}")]
    BadFraction(f64),
    #[error("invalid fold count {k} for {n} rows")]
    BadFoldCount { n: usize, k: usize },
    #[error("timestamps span more than one calendar year ({first}..{last})")]
    MultiYearSpan { first: i32, last: i32 },
    #[error("inconsistent dataset lengths: {0}")]
    LengthMismatch(String),
    #[error(transparent)]
    Csv(#[from] ::csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One raw 10-minute meteorological row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindRecord {
    pub timestamp: DateTime<Utc>,
    /// Mean wind speed, m/s.
    pub wind_speed: f64,
    /// Standard deviation of wind speed over the previous ten minutes, m/s.
    pub wind_speed_std: f64,
    /// Wind direction in degrees, normalized into `[0, 360)`.
    pub wind_dir: f64,
    /// Standard deviation of wind direction, degrees.
    pub wind_dir_std: f64,
    /// Air temperature, °C.
    pub temperature: f64,
    /// Air pressure, hPa.
    pub pressure: f64,
    /// Farm output, kW. Negative values (grid consumption) are valid.
    pub power: f64,
}

impl WindRecord {
    /// Normalizes direction into `[0, 360)`.
    pub fn normalized(mut self) -> Self {
        self.wind_dir = normalize_degrees(self.wind_dir);
        self
    }
}

pub(crate) fn normalize_degrees(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// Feature matrix with power targets and timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    /// Power in kW, never standardized.
    pub targets: Vec<f64>,
    pub timestamps: Vec<DateTime<Utc>>,
    /// The transform already applied to `features`, if any.
    pub standardization: Option<StandardizationParams>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        targets: Vec<f64>,
        timestamps: Vec<DateTime<Utc>>,
    ) -> Result<Self, IngestError> {
        let n = features.nrows();
        if n == 0 {
            return Err(IngestError::EmptyInput);
        }
        if targets.len() != n || timestamps.len() != n {
            return Err(IngestError::LengthMismatch(format!(
                "{} feature rows, {} targets, {} timestamps",
                n,
                targets.len(),
                timestamps.len()
            )));
        }
        Ok(Self {
            features,
            targets,
            timestamps,
            standardization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Named access to an engineered feature column.
    pub fn column(&self, name: &str) -> Option<ArrayView1<'_, f64>> {
        if self.n_features() != N_FEATURES {
            return None;
        }
        let j = FEATURE_NAMES.iter().position(|&c| c == name)?;
        Some(self.features.column(j))
    }

    /// Rows at `idx`, in the given order. Indices must be in range.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            timestamps: idx.iter().map(|&i| self.timestamps[i]).collect(),
            standardization: self.standardization.clone(),
        }
    }
}
