//! Cluster-routed ensemble learning for wind-power modeling.
//!
//! The crate is organised bottom-up:
//!
//! * [`ingest`] parses 10-minute meteorological records and engineers the
//!   six-column feature matrix (speed, speed turbulence, direction sine,
//!   direction turbulence, temperature, pressure).
//! * [`synth`] generates physics-grounded synthetic wind-farm records.
//! * [`cluster`] holds K-means, EM, farthest-first and Canopy clustering,
//!   plus cluster-count selection (empirical formula, elbow, X-means).
//! * [`tree`] provides reduced-error-pruned regression trees and forests.
//! * [`ensemble`] builds AdaBoost.R2, the cluster-routed layered ensemble,
//!   ridge regression and the four-way stacking fusion.
//! * [`baseline`] contains the linear, neural and boosted-tree benchmarks.
//! * [`stats`] implements error metrics and the Friedman / Tukey machinery.
//!
//! All randomness is derived from explicit `u64` seeds via [`seed`], so every
//! fit is reproducible regardless of the number of worker threads.

pub mod baseline;
pub mod cluster;
pub mod document;
pub mod ensemble;
pub mod error;
pub mod ingest;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
