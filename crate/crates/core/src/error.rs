use thiserror::Error;

use crate::baseline::BaselineError;
use crate::cluster::ClusterError;
use crate::ensemble::EnsembleError;
use crate::ingest::IngestError;
use crate::stats::StatsError;
use crate::synth::SynthError;
use crate::tree::TreeError;

/// Crate-level error, one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("model document: {0}")]
    Document(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
