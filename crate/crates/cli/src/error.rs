use thiserror::Error;

use boosthpo::bayesopt::BayesOptError;
use boosthpo::datasets::DatasetError;
use boosthpo::gbdt::GbdtError;
use boosthpo::metrics::MetricError;
use boosthpo::orchestrator::OrchestratorError;

/// Every failure maps to one of three exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GbdtError> for CliError {
    fn from(e: GbdtError) -> Self {
        match e {
            GbdtError::InvalidParams(msg) => CliError::Config(msg),
            GbdtError::ObjectiveMismatch { .. } => CliError::Config(e.to_string()),
            GbdtError::Dataset(d) => d.into(),
            GbdtError::Metric(m) => m.into(),
            // a malformed model file or an incompatible dataset is bad input
            GbdtError::NonFiniteFeature { .. }
            | GbdtError::RowTooWide { .. }
            | GbdtError::UnsupportedVersion(_)
            | GbdtError::CorruptModel(_)
            | GbdtError::Json(_) => CliError::Data(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<BayesOptError> for CliError {
    fn from(e: BayesOptError) -> Self {
        match e {
            BayesOptError::InvalidSpace(_) | BayesOptError::InvalidBudget { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<OrchestratorError> for CliError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::UnknownProfile(_)
            | OrchestratorError::InvalidAssignment(_)
            | OrchestratorError::InvalidConfig(_) => CliError::Config(e.to_string()),
            OrchestratorError::Dataset(d) => d.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
