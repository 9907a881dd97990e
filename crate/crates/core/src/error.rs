use thiserror::Error;

/// Failures while loading or validating a scenario document.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario at `{path}`: {message}")]
    Validation { path: String, message: String },
}

impl ScenarioError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("curve parameter {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("point lies {distance:.3} m beyond the end of lane `{lane}`")]
    ProjectionFailed { lane: String, distance: f64 },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed planner config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid planner config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("ranking {0:?} is not a permutation of 1..=6")]
    InvalidRanking(Vec<u8>),
}
