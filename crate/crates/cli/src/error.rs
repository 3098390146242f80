use dogfight::engine::EngineError;
use dogfight::explain::ExplainError;
use dogfight::policy::PolicyError;
use dogfight::training::TrainError;
use thiserror::Error;

/// Exit codes are a scripting contract: 0 success, 2 config or usage
/// error, 3 numerical divergence or replay mismatch, 4 missing or unusable
/// artifact. Anything else (I/O, serialization plumbing) exits 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    MissingArtifact(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::MissingArtifact(_) => 4,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(m) | TrainError::Setup(m) => CliError::Config(m),
            TrainError::Divergence(m) => CliError::Divergence(m),
            TrainError::Engine(inner) => inner.into(),
            TrainError::Policy(inner) => inner.into(),
            TrainError::Csv(inner) => CliError::Failure(inner.to_string()),
            TrainError::Io(inner) => CliError::Failure(inner.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Io(inner) => CliError::Failure(inner.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            // A checkpoint that fails to parse is as unusable as one that
            // is absent.
            PolicyError::Checkpoint(m) => CliError::MissingArtifact(m),
            PolicyError::NonFinite(m) => CliError::Divergence(m),
            PolicyError::Io(inner) if inner.kind() == std::io::ErrorKind::NotFound => {
                CliError::MissingArtifact(inner.to_string())
            }
            PolicyError::Io(inner) => CliError::Failure(inner.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ExplainError> for CliError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::MissingArtifact(m) => {
                CliError::MissingArtifact(format!("missing artifact: {m}"))
            }
            ExplainError::Train(inner) => inner.into(),
            ExplainError::Policy(inner) => inner.into(),
            ExplainError::Engine(inner) => inner.into(),
            ExplainError::Csv(inner) => CliError::Failure(inner.to_string()),
            ExplainError::Io(inner) => CliError::Failure(inner.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}
