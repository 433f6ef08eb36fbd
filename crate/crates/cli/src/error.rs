use thiserror::Error;
use windstack::baseline::BaselineError;
use windstack::cluster::ClusterError;
use windstack::ensemble::EnsembleError;
use windstack::ingest::IngestError;
use windstack::stats::StatsError;
use windstack::synth::SynthError;
use windstack::tree::TreeError;

/// Failures grouped by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::BadFoldCount { .. } | IngestError::BadFraction(_) => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::KTooLarge { .. } | ClusterError::KZero | ClusterError::BadRange { .. } => {
                CliError::Config(e.to_string())
            }
            ClusterError::NonFiniteInput | ClusterError::DimensionMismatch { .. } | ClusterError::Document(_) => {
                CliError::Data(e.to_string())
            }
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::BadParams(_) => CliError::Config(e.to_string()),
            TreeError::NonFiniteInput | TreeError::LengthMismatch { .. } | TreeError::TooFewRows { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::BadParams(_) => CliError::Config(e.to_string()),
            BaselineError::RankDeficient | BaselineError::Diverged => CliError::Numerical(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::BadConfig(_) => CliError::Config(e.to_string()),
            EnsembleError::SingularSystem => CliError::Numerical(e.to_string()),
            EnsembleError::Tree(e) => e.into(),
            EnsembleError::Cluster(e) => e.into(),
            EnsembleError::Baseline(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::BadArgument(_) => CliError::Config(e.to_string()),
            StatsError::NonConvergence | StatsError::NonFinite => CliError::Numerical(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<windstack::Error> for CliError {
    fn from(e: windstack::Error) -> Self {
        match e {
            windstack::Error::Ingest(e) => e.into(),
            windstack::Error::Synth(e) => e.into(),
            windstack::Error::Cluster(e) => e.into(),
            windstack::Error::Tree(e) => e.into(),
            windstack::Error::Ensemble(e) => e.into(),
            windstack::Error::Baseline(e) => e.into(),
            windstack::Error::Stats(e) => e.into(),
            windstack::Error::Document(m) => CliError::Data(m),
            windstack::Error::Io(e) => e.into(),
        }
    }
}
