//! Error metrics and statistical comparison of models.

mod distributions;
mod metrics;
mod comparison;

use thiserror::Error;

pub use distributions::{
    chi_square_sf, normal_cdf, student_t_two_tailed, studentized_range_cdf,
    studentized_range_quantile,
};
pub use metrics::{metric_report, nmae, nrmse, relative_reduction, MetricReport};
pub use comparison::{friedman, friedman_with, tukey, FriedmanResult, TukeyPair, TukeyResult};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("length mismatch: {pred} predictions vs {obs} observations")]
    LengthMismatch { pred: usize, obs: usize },
    #[error("no observations")]
    Empty,
    #[error("mean observation {0} is too close to zero to normalize by")]
    DegenerateMean(f64),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("need at least two columns, got {0}")]
    TooFewColumns(usize),
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} has fewer than two values")]
    TooFewValues(usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("argument out of range: {0}")]
    BadArgument(String),
    #[error("root finding did not converge")]
    NonConvergence,
}
